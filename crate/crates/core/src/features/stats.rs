/// `a / b`, or 0 when `b` is zero.
pub fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Summary of a series. Every field is 0 for an empty series.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Stats {
        if xs.is_empty() {
            return Stats::default();
        }
        let n = xs.len() as f64;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let avg = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / n;
        Stats {
            min,
            max,
            avg,
            std: var.sqrt(),
        }
    }
}
