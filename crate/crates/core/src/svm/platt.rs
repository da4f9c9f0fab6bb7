//! Probability calibration: Platt sigmoid fitting and pairwise coupling.

/// Fits `P(y=+1 | d) = 1 / (1 + exp(A d + B))` by regularized maximum
/// likelihood (Newton iterations with backtracking line search). Targets are
/// smoothed: `t+ = (N+ + 1)/(N+ + 2)`, `t- = 1/(N- + 2)`.
pub fn sigmoid_train(decisions: &[f64], labels: &[f64]) -> (f64, f64) {
    let l = decisions.len();
    let mut prior1 = 0.0;
    let mut prior0 = 0.0;
    for &y in labels {
        if y > 0.0 {
            prior1 += 1.0;
        } else {
            prior0 += 1.0;
        }
    }

    let max_iter = 100;
    let min_step = 1e-10;
    let sigma = 1e-12;
    let eps = 1e-5;

    let hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    let lo_target = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&y| if y > 0.0 { hi_target } else { lo_target })
        .collect();

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();

    let objective = |a: f64, b: f64| -> f64 {
        let mut fval = 0.0;
        for i in 0..l {
            let f_apb = decisions[i] * a + b;
            if f_apb >= 0.0 {
                fval += targets[i] * f_apb + (1.0 + (-f_apb).exp()).ln();
            } else {
                fval += (targets[i] - 1.0) * f_apb + (1.0 + f_apb.exp()).ln();
            }
        }
        fval
    };
    let mut fval = objective(a, b);

    for _ in 0..max_iter {
        let mut h11 = sigma;
        let mut h22 = sigma;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for i in 0..l {
            let f_apb = decisions[i] * a + b;
            let (p, q) = if f_apb >= 0.0 {
                let e = (-f_apb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f_apb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            let d1 = targets[i] - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut stepsize = 1.0;
        while stepsize >= min_step {
            let new_a = a + stepsize * da;
            let new_b = b + stepsize * db;
            let newf = objective(new_a, new_b);
            if newf < fval + 0.0001 * stepsize * gd {
                a = new_a;
                b = new_b;
                fval = newf;
                break;
            }
            stepsize /= 2.0;
        }
        if stepsize < min_step {
            break;
        }
    }
    (a, b)
}

/// Numerically stable `P(y=+1 | d) = 1 / (1 + exp(A d + B))`.
pub fn sigmoid_predict(decision: f64, a: f64, b: f64) -> f64 {
    let f_apb = decision * a + b;
    if f_apb >= 0.0 {
        (-f_apb).exp() / (1.0 + (-f_apb).exp())
    } else {
        1.0 / (1.0 + f_apb.exp())
    }
}

/// Couples pairwise probabilities `r[i][j] = P(class i | classes {i, j})`
/// into a class distribution by iterating the stationarity conditions of the
/// pairwise objective until the largest per-class change is at most 1e-6.
pub fn pairwise_coupling(r: &[Vec<f64>]) -> Vec<f64> {
    let k = r.len();
    if k == 1 {
        return vec![1.0];
    }
    let max_iter = 1000.max(k);
    let stop = 1e-6;

    let mut q = vec![vec![0.0; k]; k];
    for t in 0..k {
        for j in 0..t {
            q[t][t] += r[j][t] * r[j][t];
            q[t][j] = q[j][t];
        }
        for j in (t + 1)..k {
            q[t][t] += r[j][t] * r[j][t];
            q[t][j] = -r[j][t] * r[t][j];
        }
    }

    let mut p = vec![1.0 / k as f64; k];
    let mut qp = vec![0.0; k];
    for _ in 0..max_iter {
        let previous = p.clone();
        let mut p_qp = 0.0;
        for t in 0..k {
            qp[t] = 0.0;
            for j in 0..k {
                qp[t] += q[t][j] * p[j];
            }
            p_qp += p[t] * qp[t];
        }
        for t in 0..k {
            let diff = (-qp[t] + p_qp) / q[t][t];
            p[t] += diff;
            p_qp =
                (p_qp + diff * (diff * q[t][t] + 2.0 * qp[t])) / (1.0 + diff) / (1.0 + diff);
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[t][j]) / (1.0 + diff);
                p[j] /= 1.0 + diff;
            }
        }
        let max_change = p
            .iter()
            .zip(previous.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if max_change <= stop {
            break;
        }
    }
    p
}
