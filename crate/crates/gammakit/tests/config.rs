use std::path::PathBuf;

use gammakit::config::RunConfig;
use gammakit::core::{linalg, C64};
use gammakit::RustFft;
use serde_json::{json, Value};

fn parse(v: &Value) -> gammakit::Result<RunConfig> {
    RunConfig::parse(&v.to_string(), PathBuf::from("."))
}

fn base(physics: &str, params: Value) -> Value {
    json!({ "physics": physics, "grid": { "samples": [8, 8] }, "params": params })
}

fn err_text(v: &Value) -> String {
    parse(v).unwrap_err().to_string()
}

/// One single-phase config per catalog tag.
fn minimal_configs() -> Vec<(&'static str, Value)> {
    let iso = json!({ "kappa": 2.0, "mu": 1.0 });
    vec![
        ("conductivity", json!({ "sigma": [1.5] })),
        ("magnetostatics", json!({ "mu": [2.0] })),
        ("thermoelectric", json!({ "l11": [2.0], "l12": [0.5], "l21": [0.5], "l22": [3.0] })),
        ("dielectric-cg", json!({ "eps_real": [2.0], "eps_imag": [0.5] })),
        ("magnetotransport", json!({ "sigma_s": [1.0], "sigma_a": [[[0.0, 0.3], [-0.3, 0.0]]] })),
        ("elasticity", json!({ "stiffness": [iso] })),
        ("compliance-elasticity", json!({ "compliance": [iso] })),
        ("torsion", json!({ "c1313": [1.0], "c1323": [0.2], "c2323": [2.0], "tau": 0.0 })),
        ("thermoelasticity", json!({ "compliance": [iso], "alpha": [1.0], "c_over_t0": [1.0] })),
        (
            "coupled-eme",
            json!({
                "compliance": [iso], "piezoelectric": [0.0], "piezomagnetic": [0.0],
                "permittivity": [2.0], "magnetoelectric": [0.1], "permeability": [3.0]
            }),
        ),
        ("viscoelastic-cg", json!({ "stiffness_real": [iso], "stiffness_imag": [{ "kappa": 0.5, "mu": 0.25 }] })),
        ("graphene", json!({ "sigma0": [1.0], "d_ell": [0.1] })),
        ("oseen", json!({ "rho": 1.0, "velocity": [0.5, 0.0], "eta": [1.0] })),
    ]
}

#[test]
fn every_catalog_tag_builds_from_a_minimal_config() {
    let configs = minimal_configs();
    assert_eq!(configs.len(), 13);
    for (tag, params) in configs {
        let cfg = parse(&base(tag, params)).unwrap_or_else(|e| panic!("{tag}: {e}"));
        let p = cfg.build(&RustFft::new()).unwrap_or_else(|e| panic!("{tag}: {e}"));
        // A torsion problem without twist is labelled as plain antiplane shear.
        let expect = if tag == "torsion" { "antiplane" } else { tag };
        assert_eq!(p.meta.physics, expect);
        assert_eq!(p.grid().samples(), &[8, 8]);
    }
}

#[test]
fn unknown_top_level_key_is_named() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["tolerence"] = json!(1e-8);
    let e = err_text(&v);
    assert!(e.contains("tolerence"), "{e}");
}

#[test]
fn unknown_param_is_named() {
    let e = err_text(&base("conductivity", json!({ "sigma": [1.0], "sigmaa": [2.0] })));
    assert!(e.contains("params") && e.contains("sigmaa"), "{e}");
}

#[test]
fn unknown_nested_keys_are_rejected() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["solver"] = json!({ "tol": 1e-8 });
    assert!(err_text(&v).contains("tol"));
    let mut v = base("conductivity", json!({ "sigma": [1.0, 2.0] }));
    v["phases"] = json!({ "kind": "checkerboard", "size": 2 });
    assert!(err_text(&v).contains("size"));
}

#[test]
fn unknown_physics_tag() {
    let e = err_text(&base("plasticity", json!({})));
    assert!(e.contains("plasticity"), "{e}");
}

#[test]
fn missing_param_is_named() {
    let e = err_text(&base("thermoelectric", json!({ "l11": [1.0], "l12": [0.0], "l21": [0.0] })));
    assert!(e.contains("l22"), "{e}");
}

#[test]
fn phase_count_must_match() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["phases"] = json!({ "kind": "checkerboard" });
    let e = parse(&v).unwrap().build(&RustFft::new()).unwrap_err().to_string();
    assert!(e.contains("params.sigma") && e.contains("2 phases"), "{e}");
}

#[test]
fn matrix_shape_is_checked() {
    let v = base("conductivity", json!({ "sigma": [[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]] }));
    let e = parse(&v).unwrap().build(&RustFft::new()).unwrap_err().to_string();
    assert!(e.contains("params.sigma[0]") && e.contains("2×2"), "{e}");
}

#[test]
fn scalar_complex_and_matrix_entries_agree() {
    let scalar = parse(&base("conductivity", json!({ "sigma": [{ "re": 2.0, "im": 0.5 }] })))
        .unwrap()
        .build(&RustFft::new())
        .unwrap();
    let matrix = parse(&base(
        "conductivity",
        json!({ "sigma": [[[{ "re": 2.0, "im": 0.5 }, 0.0], [0.0, { "re": 2.0, "im": 0.5 }]]] }),
    ))
    .unwrap()
    .build(&RustFft::new())
    .unwrap();
    assert_eq!(scalar.operator().matrix_at(5), matrix.operator().matrix_at(5));
    assert_eq!(scalar.operator().matrix_at(0)[0], C64::new(2.0, 0.5));
}

#[test]
fn isotropic_compliance_inverts_isotropic_stiffness() {
    let moduli = json!([{ "kappa": 3.0, "mu": 1.25 }]);
    let c = parse(&base("elasticity", json!({ "stiffness": moduli.clone() }))).unwrap().build(&RustFft::new()).unwrap();
    let s = parse(&base("compliance-elasticity", json!({ "compliance": moduli })))
        .unwrap()
        .build(&RustFft::new())
        .unwrap();
    let cm = c.operator().matrix_at(0);
    let sm = s.operator().matrix_at(0);
    let n = (cm.len() as f64).sqrt() as usize;
    let prod = linalg::mat_mul(n, n, n, &sm, &cm);
    let mut eye = vec![C64::new(0.0, 0.0); n * n];
    (0..n).for_each(|i| eye[i * n + i] = C64::new(1.0, 0.0));
    let defect = linalg::frobenius(&linalg::sub(&prod, &eye));
    assert!(defect <= 1e-13, "{defect}");
    // Bulk modulus from the stiffness: κ = (I:C:I)/d² with d = 2.
    let kappa: f64 = (0..2).flat_map(|i| (0..2).map(move |j| i * n + j)).map(|q| cm[q].re).sum::<f64>() / 4.0;
    assert!((kappa - 3.0).abs() < 1e-12, "{kappa}");
}

#[test]
fn spectrum_source_is_real_by_default() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["source"] = json!({
        "kind": "spectrum",
        "modes": [{ "index": [1, 2], "amplitude": [{ "re": 0.0, "im": -0.5 }, 0.25] }]
    });
    let p = parse(&v).unwrap().build(&RustFft::new()).unwrap();
    let s = p.source();
    assert!(s.max_imag() == 0.0 || s.max_imag() < 1e-15 * s.max_abs());
    // -i/2·e^{iθ} + c.c. = sin θ with θ = 2π(x + 2y).
    let g = p.grid();
    for q in [0, 3, 17, 40] {
        let x = g.position(q);
        let theta = 2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1]);
        assert!((s.at(q)[0].re - theta.sin()).abs() < 1e-14);
        assert!((s.at(q)[1].re - 0.5 * theta.cos()).abs() < 1e-14);
    }
}

#[test]
fn spectrum_mode_shape_is_checked() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["source"] = json!({ "kind": "spectrum", "modes": [{ "index": [1], "amplitude": [1.0, 0.0] }] });
    let e = parse(&v).unwrap().build(&RustFft::new()).unwrap_err().to_string();
    assert!(e.contains("source.modes[0]"), "{e}");
}

#[test]
fn resolution_override_and_applied_field() {
    let mut v = base("conductivity", json!({ "sigma": [1.0] }));
    v["applied"] = json!([1.0, { "re": 0.0, "im": 2.0 }]);
    let mut cfg = parse(&v).unwrap();
    cfg.set_resolution(16).unwrap();
    assert_eq!(cfg.grid().unwrap().samples(), &[16, 16]);
    assert_eq!(cfg.applied(2).unwrap(), vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
    assert!(cfg.applied(3).is_err());
}

#[test]
fn odd_samples_are_rejected() {
    let v = json!({ "physics": "conductivity", "grid": { "samples": [7, 8] }, "params": { "sigma": [1.0] } });
    assert!(parse(&v).unwrap().grid().is_err());
}

#[test]
fn voxel_paths_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let labels: Vec<u8> = (0..64).map(|p| if p % 8 < 4 { 1 } else { 2 }).collect();
    std::fs::write(dir.path().join("labels.raw"), &labels).unwrap();
    let mut v = base("conductivity", json!({ "sigma": [1.0, 3.0] }));
    v["phases"] = json!({ "kind": "voxels", "path": "labels.raw" });
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, v.to_string()).unwrap();
    let mut cfg = RunConfig::load(&cfg_path).unwrap();
    let p = cfg.build(&RustFft::new()).unwrap();
    assert_eq!(p.operator().matrix_at(0)[0].re, 1.0);
    assert_eq!(p.operator().matrix_at(5)[0].re, 3.0);
    assert!(cfg.set_resolution(16).is_err());
}
