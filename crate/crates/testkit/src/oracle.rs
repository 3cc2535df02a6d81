use masscad::roi::MaskedRegion;
use masscad::FeatureRecord;

/// Term-by-term transcription of the seven texture formulas.
///
/// Walks the region row by row, normalizes each active pixel by 255 and
/// evaluates every sum literally. Skewness and kurtosis are zero when the
/// standard deviation is below 1e-12.
pub fn oracle_features(region: &MaskedRegion) -> FeatureRecord {
    let img = region.image();
    let (width, height) = (img.width(), img.height());
    let mask = region.mask();

    let mut values: Vec<f64> = Vec::new();
    let mut levels = [0usize; 256];
    for i in 0..height {
        for j in 0..width {
            if mask[i * width + j] {
                let p = img.pixels()[i * width + j];
                values.push(p as f64 / 255.0);
                levels[p as usize] += 1;
            }
        }
    }
    let n = values.len() as f64;

    let mut sum = 0.0;
    for v in &values {
        sum += v;
    }
    let mu = sum / n;

    let mut sq = 0.0;
    for v in &values {
        sq += (v - mu) * (v - mu);
    }
    let sigma = (sq / n).sqrt();

    let r = 1.0 - 1.0 / (1.0 + sigma * sigma);

    let mut h = 0.0;
    let mut u = 0.0;
    for &z in levels.iter() {
        let pr = z as f64 / n;
        if pr > 0.0 {
            h -= pr * pr.log2();
        }
        u += pr * pr;
    }

    let (mut s, mut k) = (0.0, 0.0);
    if sigma >= 1e-12 {
        for v in &values {
            let t = (v - mu) / sigma;
            s += t * t * t;
            k += t * t * t * t;
        }
        s /= n;
        k = k / n - 3.0;
    }

    FeatureRecord {
        id: "oracle".to_string(),
        mean: mu,
        std_dev: sigma,
        smoothness: r,
        entropy: if h == 0.0 { 0.0 } else { h },
        skewness: s,
        kurtosis: k,
        uniformity: u,
        label: None,
    }
}
