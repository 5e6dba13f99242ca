use std::path::PathBuf;

use ephs_assemble::{assemble, AssembleOptions, DaeSystem};
use ephs_components::Component;
use ephs_core::{flatten, Binding, Pattern};
use ephs_models::*;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; `EPHS_BLESS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("EPHS_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden {name} differs");
}

fn flat(model: &(Pattern, Binding<Component>)) -> Pattern {
    flatten(&model.0, &model.1).unwrap().0
}

fn system(model: &(Pattern, Binding<Component>)) -> DaeSystem {
    let (p, b) = flatten(&model.0, &model.1).unwrap();
    assemble(&p, &b, AssembleOptions::default()).unwrap()
}

fn builders() -> Vec<(&'static str, Model)> {
    let (b, j) = (demo::body(), demo::joint(0.1, 2.0).unwrap());
    vec![
        ("osc", build_oscillator(1.0, 1.0).unwrap()),
        ("damped_osc", build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap()),
        ("damped_osc_flat", build_damped_oscillator_flat(1.0, 1.0, 0.1, 300.0).unwrap()),
        ("body", build_body(&b).unwrap()),
        ("joint", build_joint(&j, &demo::env()).unwrap()),
        ("mbs", build_basic_mbs(&b, &b, &j, &demo::env()).unwrap()),
        ("mbs_flat", build_basic_mbs_flat(&b, &b, &j, &demo::env()).unwrap()),
    ]
}

#[test]
fn flattened_patterns_match_stored_canonical_json() {
    for (name, model) in builders() {
        check_golden(&format!("{name}.json"), &flat(&model).to_canonical_json());
    }
}

#[test]
fn nested_builders_flatten_to_the_flat_figures() {
    let (b, j) = (demo::body(), demo::joint(0.1, 2.0).unwrap());
    let damped = build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap();
    let damped_flat = build_damped_oscillator_flat(1.0, 1.0, 0.1, 300.0).unwrap();
    assert_eq!(flat(&damped).canonical(), damped_flat.0.canonical());
    let mbs = build_basic_mbs(&b, &b, &j, &demo::env()).unwrap();
    let mbs_flat = build_basic_mbs_flat(&b, &b, &j, &demo::env()).unwrap();
    assert_eq!(flat(&mbs).canonical(), mbs_flat.0.canonical());
    assert_eq!(mbs_flat.0.boxes.len(), 15);
}

fn assert_dump(sys: &DaeSystem, expected: &[&str]) {
    let got = sys.dump();
    assert_eq!(got, expected.iter().map(|s| s.to_string()).collect::<Vec<_>>());
}

#[test]
fn oscillator_equations() {
    // q̇ = p/m = p.e, ṗ = −kq + p.f
    let sys = system(&build_oscillator(1.0, 1.0).unwrap());
    assert_dump(&sys, &["d/dt p = -dE[pe](q) + p.f", "d/dt q = dE[ke](p)", "p.e = dE[ke](p)"]);
    assert_eq!((sys.layout.nx, sys.layout.nz), (2, 0));
}

#[test]
fn damped_oscillator_equations() {
    // q̇ = υ, ṗ = −kq − dυ, ṡ = dυ²/θ0
    for model in [
        build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap(),
        build_damped_oscillator_flat(1.0, 1.0, 0.1, 300.0).unwrap(),
    ] {
        assert_dump(
            &system(&model),
            &[
                "d/dt osc.q = dE[osc.ke](p)",
                "d/dt p = -μ♭[mf](dE[osc.ke](p)) - dE[osc.pe](osc.q)",
                "d/dt s = μ[mf](dE[osc.ke](p), dE[osc.ke](p))/θ0",
            ],
        );
    }
}

#[test]
fn body_equations() {
    // q̇ = TeL_q(u), ṗ = ad*_u(p) − T*eL_q(f_q) + p.f, p.e = u
    let sys = system(&build_body(&demo::body()).unwrap());
    assert_dump(
        &sys,
        &[
            "d/dt p = ad*[dE[ke](p)](p) - T*eL[q](dE[pe](q)) + p.f",
            "d/dt q = TeL[q](dE[ke](p))",
            "p.e = dE[ke](p)",
        ],
    );
}

#[test]
fn joint_equations() {
    // q̇_r = TeL(u_r), ṡ = μ(u_r,u_r)/θ0, 0 = T*eL(dV_r) + i*(λ) + μ♭(u_r),
    // 0 = Ad_{I(q_r⁻¹)} Ad_{o1⁻¹} p1.e − Ad_{o2⁻¹} p2.e + i(u_r),
    // p1.f = Ad*_{o1⁻¹} Ad*_{I(q_r⁻¹)} λ, p2.f = −Ad*_{o2⁻¹} λ
    let sys = system(&build_joint(&demo::joint(0.1, 2.0).unwrap(), &demo::env()).unwrap());
    assert_dump(
        &sys,
        &[
            "d/dt q_r = TeL[q_r](e[p_r])",
            "d/dt s = μ[mf](e[p_r], e[p_r])/θ0",
            "0 = i*(λ[hc]) + μ♭[mf](e[p_r]) + T*eL[q_r](dE[pe](q_r))",
            "0 = Ad[I(q_r)⁻¹](Ad[o1⁻¹](p1.e)) - Ad[o2⁻¹](p2.e) + i(e[p_r])",
            "p1.f = Ad*[o1⁻¹](Ad*[I(q_r)⁻¹](λ[hc]))",
            "p2.f = -Ad*[o2⁻¹](λ[hc])",
        ],
    );
}

#[test]
fn two_body_equations() {
    for model in [demo::mbs(0.1, 2.0).unwrap(), {
        let (b, j) = (demo::body(), demo::joint(0.1, 2.0).unwrap());
        build_basic_mbs_flat(&b, &b, &j, &demo::env()).unwrap()
    }] {
        assert_dump(
            &system(&model),
            &[
                "d/dt b1.q = TeL[b1.q](dE[b1.ke](p1))",
                "d/dt b2.q = TeL[b2.q](dE[b2.ke](p2))",
                "d/dt j.q_r = TeL[j.q_r](e[j.p_r])",
                "d/dt j.s = μ[j.mf](e[j.p_r], e[j.p_r])/θ0",
                "d/dt p1 = ad*[dE[b1.ke](p1)](p1) - T*eL[b1.q](dE[b1.pe](b1.q)) - Ad*[j.o1⁻¹](Ad*[I(j.q_r)⁻¹](λ[j.hc]))",
                "d/dt p2 = ad*[dE[b2.ke](p2)](p2) - T*eL[b2.q](dE[b2.pe](b2.q)) + Ad*[j.o2⁻¹](λ[j.hc])",
                "0 = i*(λ[j.hc]) + μ♭[j.mf](e[j.p_r]) + T*eL[j.q_r](dE[j.pe](j.q_r))",
                "0 = Ad[I(j.q_r)⁻¹](Ad[j.o1⁻¹](dE[b1.ke](p1))) - Ad[j.o2⁻¹](dE[b2.ke](p2)) + i(e[j.p_r])",
            ],
        );
    }
}
