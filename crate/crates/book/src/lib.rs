//! The chapters of the guide, included verbatim so `cargo test` runs every
//! snippet in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/images.md")]
pub mod images {}
#[doc = include_str!("../../../book/src/segmentation.md")]
pub mod segmentation {}
#[doc = include_str!("../../../book/src/matching.md")]
pub mod matching {}
#[doc = include_str!("../../../book/src/features.md")]
pub mod features {}
#[doc = include_str!("../../../book/src/clustering.md")]
pub mod clustering {}
#[doc = include_str!("../../../book/src/spotting.md")]
pub mod spotting {}
#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[cfg(test)]
mod tests {
    use std::fs;

    // Every chapter listed in the table of contents is included above.
    #[test]
    fn summary_matches_included_chapters() {
        let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src");
        let summary = fs::read_to_string(format!("{root}/SUMMARY.md")).unwrap();
        let lib = include_str!("lib.rs");
        let mut n = 0;
        for line in summary.lines() {
            if let Some(file) = line.split("](").nth(1).and_then(|r| r.strip_suffix(')')) {
                assert!(lib.contains(&format!("book/src/{file}\")")), "{file} is not included");
                n += 1;
            }
        }
        let on_disk = fs::read_dir(root).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "md")).count();
        assert_eq!(n + 1, on_disk, "chapters on disk missing from SUMMARY.md");
    }
}
