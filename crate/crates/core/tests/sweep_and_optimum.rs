use qrng_entropy::detector::{AcquisitionParams, CalibrationCurve, DetectorArrayModel};
use qrng_entropy::entropy::{optimize_mu, sweep_mu, write_sweep_csv, TruncationPolicy, SWEEP_CSV_HEADER};

fn uniform(m: usize, eta: f64) -> DetectorArrayModel {
    DetectorArrayModel::uniform(m, eta, AcquisitionParams::default()).unwrap()
}

/// Nine pixels at half efficiency: the classical entropy climbs to 9 bits
/// while the conditional one peaks at moderate flux and then collapses.
#[test]
fn nine_pixel_sweep_has_interior_peak_and_collapse() {
    let grid: Vec<f64> = (0..=56).map(|i| 0.05 * 1.12f64.powi(i)).chain([28.0]).collect();
    let rows = sweep_mu(&grid, &uniform(9, 0.5), &TruncationPolicy::default(), None).unwrap();
    let (peak, best) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.h_conditional.total_cmp(&b.1.h_conditional))
        .unwrap();
    assert!(peak > 0 && peak < rows.len() - 2, "peak at index {peak}");
    assert!(best.h_conditional > 1.0 && best.h_conditional < 9.0);
    for w in rows.windows(2).take(rows.len() - 2) {
        assert!(w[1].h_classical >= w[0].h_classical - 1e-12);
    }
    let last = rows.last().unwrap();
    assert_eq!(last.mu_px, 28.0);
    assert!(last.h_conditional < 1e-10);
    assert!((last.h_classical - 9.0).abs() < 1e-9);
    for r in &rows {
        assert!(r.h_conditional <= r.h_classical + 1e-9, "mu = {}", r.mu_px);
    }
}

#[test]
fn optimum_beats_brighter_operation() {
    let model = uniform(4, 1.0);
    let policy = TruncationPolicy::default();
    let (mu_star, rate) = optimize_mu(&model, &policy, (0.05, 6.0), 0.05).unwrap();
    assert!(rate > 0.0);
    let rows = sweep_mu(&[mu_star, 2.0 * mu_star], &model, &policy, None).unwrap();
    assert_eq!(rows[0].secure_rate, rate);
    assert!(rate > rows[1].secure_rate);

    let (mu9, rate9) = optimize_mu(&uniform(9, 0.5), &policy, (0.1, 10.0), 0.1).unwrap();
    assert!(rate9 > 0.0 && mu9 > 0.1 && mu9 < 10.0);
}

#[test]
fn calibrated_sweep_uses_curve_and_writes_csv() {
    let curve = CalibrationCurve::new(vec![(0.1, 0.9), (1.0, 0.6), (5.0, 0.4)]).unwrap();
    let policy = TruncationPolicy::default();
    let rows = sweep_mu(&[0.1, 0.55, 5.0], &uniform(4, 1.0), &policy, Some(&curve)).unwrap();
    assert_eq!(rows[0].eta, 0.9);
    assert!((rows[1].eta - 0.75).abs() < 1e-12);
    assert_eq!(rows[2].eta, 0.4);
    assert!(sweep_mu(&[6.0], &uniform(4, 1.0), &policy, Some(&curve)).is_err());

    let mut out = Vec::new();
    write_sweep_csv(&rows, &["note".into()], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# note");
    assert_eq!(lines[1], SWEEP_CSV_HEADER);
    assert_eq!(lines.len(), 5);
}
