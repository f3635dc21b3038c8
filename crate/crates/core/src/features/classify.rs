use super::{FeatureError, FeatureVector};

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Label of the Euclidean-nearest training vector; ties go to the earliest.
pub fn classify_font_1nn<'a>(query: &FeatureVector, training: &'a [(String, FeatureVector)]) -> Result<&'a str, FeatureError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, fv)) in training.iter().enumerate() {
        if !fv.compatible_with(query) {
            return Err(FeatureError::ExtractorMismatch(format!(
                "query is {} {:?} (len {}), training[{i}] is {} {:?} (len {})",
                query.extractor,
                query.params,
                query.len(),
                fv.extractor,
                fv.params,
                fv.len()
            )));
        }
        let d = euclidean(&query.values, &fv.values);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| training[i].0.as_str()).ok_or(FeatureError::EmptyTraining)
}
