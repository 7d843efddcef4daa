//! Locale-independent numeric formatting: 12 significant digits, dot
//! decimal separator.

pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-3..1e12).contains(&a) {
        let digits = a.log10().floor() as i32;
        let prec = (11 - digits).max(0) as usize;
        format!("{v:.prec$}")
    } else {
        format!("{v:.11e}")
    }
}
