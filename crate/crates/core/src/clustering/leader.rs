use super::ClusterError;

/// Single-pass threshold clustering.
///
/// Items are visited in order; each joins the first class whose leader
/// (founding member) is within `tau`, otherwise it founds a new class.
/// Returns member indices per class, classes in founding order. The result
/// depends on input order.
pub fn leader_cluster<T>(items: &[T], dissimilarity: impl Fn(&T, &T) -> f64, tau: f64) -> Result<Vec<Vec<usize>>, ClusterError> {
    if !(tau >= 0.0) {
        return Err(ClusterError::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match classes.iter_mut().find(|c| dissimilarity(&items[c[0]], item) <= tau) {
            Some(class) => class.push(i),
            None => classes.push(vec![i]),
        }
    }
    Ok(classes)
}
