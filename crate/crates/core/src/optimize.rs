//! Derivative-free 1-D maximisation: a coarse scan to locate the best
//! bracket, then golden-section refinement inside it.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Ties keep the left point, so flat plateaus resolve toward `lo`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Maximum {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let argmax = 0.5 * (a + b);
    let value = f(argmax);
    // The midpoint can lose to an interior probe on a flat-topped function.
    [(argmax, value), (c, fc), (d, fd)]
        .into_iter()
        .fold(Maximum { argmax, value: f64::NEG_INFINITY }, |best, (x, v)| {
            if v > best.value || (v == best.value && x < best.argmax) {
                Maximum { argmax: x, value: v }
            } else {
                best
            }
        })
}

/// Scans `points` evenly spaced abscissae over `[lo, hi]`, then refines the
/// best one with golden section inside its neighbouring cell. Non-finite
/// objective values are treated as excluded points. Returns `None` when no
/// scan point is finite.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Option<Maximum> {
    assert!(points >= 2 && hi > lo);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..points {
        let v = f(lo + step * i as f64);
        if v.is_finite() && best.map_or(true, |(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    let (i, v) = best?;
    let left = lo + step * i.saturating_sub(1) as f64;
    let right = (lo + step * (i + 1) as f64).min(hi);
    let refined = golden_section_max(
        |x| {
            let y = f(x);
            if y.is_finite() {
                y
            } else {
                f64::NEG_INFINITY
            }
        },
        left,
        right,
        tol,
    );
    let scan_point = lo + step * i as f64;
    Some(if refined.value > v {
        refined
    } else {
        Maximum {
            argmax: scan_point,
            value: v,
        }
    })
}
