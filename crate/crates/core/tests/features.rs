use glyphspot::corpus::{degrade, synth_page, Degradation, GlyphAtlas, Layout};
use glyphspot::features::{euclidean, fractal_signature, wavelet_energy_features};
use glyphspot::GrayImage;

const TEXT: [&str; 7] = [
    "pack my box with",
    "five dozen liquor",
    "jugs the quick",
    "brown fox jumps",
    "over a lazy dog",
    "sphinx of black",
    "quartz judge",
];

fn render(atlas: &GlyphAtlas, font: &str) -> GrayImage {
    let layout = Layout { page_width: 800, page_height: 320, margin: 4, line_gap: 4, ..Layout::default() };
    let lines: Vec<String> = TEXT.iter().map(|s| s.to_string()).collect();
    synth_page(atlas, &lines, font, &layout, 1).unwrap().0.crop(0, 0, 256, 256)
}

fn noisy(img: &GrayImage, seed: u64) -> GrayImage {
    degrade(img, &Degradation { noise_sigma: 10.0, ..Degradation::NONE }, seed).unwrap()
}

#[test]
fn fractal_signatures_separate_fonts_beyond_noise() {
    let atlas = GlyphAtlas::builtin();
    let fonts = atlas.font_ids();
    let sig = |img: &GrayImage| fractal_signature(img, 4).unwrap().values;
    let pages: Vec<GrayImage> = fonts.iter().map(|f| render(&atlas, f)).collect();
    let mut within = 0.0f64;
    for (i, page) in pages.iter().enumerate() {
        let d = euclidean(&sig(&noisy(page, 2 * i as u64)), &sig(&noisy(page, 2 * i as u64 + 1)));
        within = within.max(d);
    }
    let mut between = f64::INFINITY;
    for i in 0..pages.len() {
        for j in i + 1..pages.len() {
            between = between.min(euclidean(&sig(&noisy(&pages[i], 100 + i as u64)), &sig(&noisy(&pages[j], 200 + j as u64))));
        }
    }
    assert!(between > within, "closest fonts {between:.4}, noisy copies up to {within:.4}");
}

#[test]
fn wavelet_features_are_distributions() {
    let atlas = GlyphAtlas::builtin();
    for font in atlas.font_ids() {
        let fv = wavelet_energy_features(&noisy(&render(&atlas, font), 0), 3).unwrap();
        assert_eq!(fv.len(), 10);
        assert!((fv.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
