use super::*;
use crate::exactlin::ratio;

fn cfg(s: &str) -> CsitConfig {
    s.parse().unwrap()
}

fn q(v: &[(i64, i64)]) -> Vec<Rational> {
    v.iter().map(|&(a, b)| ratio(a, b)).collect()
}

fn coefficient_set(region: &DofRegion) -> BTreeSet<Vec<Rational>> {
    region.inequalities().iter().map(|i| i.coefficients.clone()).collect()
}

/// Published inequality lists for the three-receiver classes (box rows and
/// redundant rows omitted).
fn oracle_region(name: &str) -> Vec<Vec<Rational>> {
    match name {
        "PPP" => vec![],
        "PPD" => vec![q(&[(1, 2), (1, 4), (1, 1)]), q(&[(1, 4), (1, 2), (1, 1)])],
        "PPN" => vec![q(&[(1, 1), (0, 1), (1, 1)]), q(&[(0, 1), (1, 1), (1, 1)])],
        "PDD" => vec![
            q(&[(1, 2), (1, 4), (1, 1)]),
            q(&[(1, 2), (1, 1), (1, 4)]),
            q(&[(1, 3), (1, 2), (1, 1)]),
            q(&[(1, 3), (1, 1), (1, 2)]),
        ],
        "PDN" => vec![q(&[(1, 2), (1, 1), (1, 1)]), q(&[(1, 1), (0, 1), (1, 1)])],
        "DDD" => (0..3)
            .permutations(3)
            .map(|p| {
                let mut v = vec![Rational::zero(); 3];
                for (pos, &j) in p.iter().enumerate() {
                    v[j] = ratio(1, pos as i64 + 1);
                }
                v
            })
            .collect(),
        "DDN" => vec![q(&[(1, 2), (1, 1), (1, 1)]), q(&[(1, 1), (1, 2), (1, 1)])],
        "PNN" | "DNN" | "NNN" => vec![q(&[(1, 1), (1, 1), (1, 1)])],
        _ => unreachable!(),
    }
}

/// Same polytope: each region's vertices satisfy the other's rows.
fn same_polytope(a: &DofRegion, b: &DofRegion) -> bool {
    let va = vertices(a).unwrap();
    let vb = vertices(b).unwrap();
    va.iter().all(|v| b.contains(v)) && vb.iter().all(|v| a.contains(v))
}

fn region_from(config: &CsitConfig, rows: Vec<Vec<Rational>>) -> DofRegion {
    DofRegion {
        config: config.clone(),
        inequalities: rows.into_iter().map(|c| Inequality::new(c, Family::Idb)).collect(),
    }
}

#[test]
fn three_user_regions_match_published_lists() {
    for config in CsitConfig::three_user_classes() {
        let name = config.to_string();
        let built = build_region(&config).unwrap();
        let oracle = region_from(&config, oracle_region(&name));
        assert!(same_polytope(&built, &oracle), "{name}");
        let expected: BTreeSet<_> = oracle_region(&name).into_iter().collect();
        let got = coefficient_set(&built);
        assert!(expected.is_subset(&got), "{name}");
        for (i, row) in built.inequalities().iter().enumerate() {
            if !expected.contains(&row.coefficients) {
                assert!(built.is_redundant(i).unwrap(), "{name}: {row}");
            }
        }
    }
}

#[test]
fn pdd_keeps_four_inequalities_and_ppp_keeps_one_redundant_row() {
    assert_eq!(build_region(&cfg("PDD")).unwrap().inequalities().len(), 4);
    let ppp = build_region(&cfg("PPP")).unwrap();
    assert_eq!(ppp.inequalities().len(), 1);
    assert!(ppp.is_redundant(0).unwrap());
    assert_eq!(ppp.inequalities()[0].to_string(), "d1/3 + d2/3 + d3/3 <= 1");
}

#[test]
fn ppn_keeps_weighted_row() {
    let ppn = build_region(&cfg("PPN")).unwrap();
    let rows: Vec<String> = ppn.inequalities().iter().map(ToString::to_string).collect();
    assert!(rows.contains(&"d1/3 + d2/3 + d3 <= 1".to_string()), "{rows:?}");
}

#[test]
fn table1_sumdof_values() {
    for row in table1_report().unwrap() {
        assert!(row.matches, "{} gave {}", row.config, format_rational(&row.sumdof));
    }
}

#[test]
fn sumdof_agrees_with_vertex_maximum() {
    for s in ["PPD", "PDD", "DDD", "PDDN", "DDDD", "PPDD", "PPPD", "DDNN"] {
        let region = build_region(&cfg(s)).unwrap();
        let best = vertices(&region).unwrap().iter().map(|v| v.iter().sum::<Rational>()).max().unwrap();
        assert_eq!(sumdof(&region).unwrap(), best, "{s}");
    }
}

#[test]
fn table2_points_are_vertices() {
    let cases: Vec<(&str, Vec<Vec<Rational>>)> = vec![
        ("PPD", vec![q(&[(1, 1), (0, 1), (1, 2)]), q(&[(0, 1), (1, 1), (1, 2)]), q(&[(1, 1), (1, 1), (1, 4)])]),
        (
            "PDD",
            vec![
                q(&[(1, 1), (0, 1), (1, 2)]),
                q(&[(1, 1), (1, 2), (0, 1)]),
                q(&[(1, 1), (2, 5), (2, 5)]),
                q(&[(3, 4), (1, 2), (1, 2)]),
                q(&[(0, 1), (2, 3), (2, 3)]),
            ],
        ),
        ("PDN", vec![q(&[(1, 1), (1, 2), (0, 1)])]),
        (
            "DDD",
            vec![
                q(&[(2, 3), (2, 3), (0, 1)]),
                q(&[(2, 3), (0, 1), (2, 3)]),
                q(&[(0, 1), (2, 3), (2, 3)]),
                q(&[(6, 11), (6, 11), (6, 11)]),
            ],
        ),
        ("DDN", vec![q(&[(2, 3), (2, 3), (0, 1)])]),
    ];
    for (s, points) in cases {
        let verts = vertices(&build_region(&cfg(s)).unwrap()).unwrap();
        for p in points {
            assert!(verts.contains(&p), "{s} missing {p:?}");
        }
    }
}

#[test]
fn pdd_nontrivial_vertices() {
    let region = build_region(&cfg("PDD")).unwrap();
    let expected = vec![
        q(&[(0, 1), (2, 3), (2, 3)]),
        q(&[(3, 4), (1, 2), (1, 2)]),
        q(&[(1, 1), (0, 1), (1, 2)]),
        q(&[(1, 1), (2, 5), (2, 5)]),
        q(&[(1, 1), (1, 2), (0, 1)]),
    ];
    assert_eq!(nontrivial_vertices(&region).unwrap(), expected);
    // (0, 1, 1/2) is a vertex for PPD but breaks d1/2 + d2 + d3/4 <= 1 here.
    let p = q(&[(0, 1), (1, 1), (1, 2)]);
    assert!(!region.contains(&p));
    assert!(build_region(&cfg("PPD")).unwrap().contains(&p));
}

#[test]
fn nnn_vertices_are_simplex_corners() {
    let verts = vertices(&build_region(&cfg("NNN")).unwrap()).unwrap();
    let expected = vec![
        q(&[(0, 1), (0, 1), (0, 1)]),
        q(&[(0, 1), (0, 1), (1, 1)]),
        q(&[(0, 1), (1, 1), (0, 1)]),
        q(&[(1, 1), (0, 1), (0, 1)]),
    ];
    assert_eq!(verts, expected);
}

#[test]
fn vertices_rejected_above_four() {
    let region = build_region(&cfg("PDDDD")).unwrap();
    let err = vertices(&region).unwrap_err();
    assert_eq!(err.to_string(), "vertex enumeration unsupported above k=4 (got k = 5)");
}

#[test]
fn upgrading_csit_never_shrinks_region() {
    let upgrades = [(CsitState::N, CsitState::D), (CsitState::D, CsitState::P)];
    for config in CsitConfig::three_user_classes() {
        let weak = build_region(&config).unwrap();
        let verts = vertices(&weak).unwrap();
        for j in 0..3 {
            for (from, to) in upgrades {
                if config.state(j) != from {
                    continue;
                }
                let mut states = config.states().to_vec();
                states[j] = to;
                let strong = build_region(&CsitConfig::new(states)).unwrap();
                assert!(verts.iter().all(|v| strong.contains(v)), "{config} upgrade at {j}");
            }
        }
    }
}

#[test]
fn relabeling_permutes_vertices() {
    for s in ["PDD", "DDD", "PDN", "DDN", "PPD"] {
        let config = cfg(s);
        let verts: BTreeSet<_> = vertices(&build_region(&config).unwrap()).unwrap().into_iter().collect();
        for sigma in (0..3).permutations(3) {
            let states: Vec<CsitState> = (0..3).map(|j| config.state(sigma[j])).collect();
            let moved = vertices(&build_region(&CsitConfig::new(states)).unwrap()).unwrap();
            let back: BTreeSet<Vec<Rational>> =
                moved.iter().map(|v| { let mut w = vec![Rational::zero(); 3]; for j in 0..3 { w[sigma[j]] = v[j].clone(); } w }).collect();
            assert_eq!(back, verts, "{s} under {sigma:?}");
        }
    }
}

#[test]
fn single_delayed_receiver_sumdof_closed_form() {
    for p in 1..=6 {
        let config = CsitConfig::ordered(p, 1, 0);
        let region = build_region(&config).unwrap();
        assert_eq!(sumdof(&region).unwrap(), prop2_value(p), "P = {p}");
        assert_eq!(outer_bound_sumdof(&config).unwrap(), prop2_value(p), "P = {p}");
    }
}

#[test]
fn cutting_plane_matches_full_lp() {
    for config in CsitConfig::three_user_classes() {
        let full = sumdof(&build_region(&config).unwrap()).unwrap();
        assert_eq!(outer_bound_sumdof(&config).unwrap(), full, "{config}");
    }
    for (p, d, n) in [(2, 2, 0), (3, 2, 0), (2, 3, 1), (1, 4, 1), (0, 5, 0), (4, 3, 0)] {
        let config = CsitConfig::ordered(p, d, n);
        let full = sumdof(&build_region(&config).unwrap()).unwrap();
        assert_eq!(outer_bound_sumdof(&config).unwrap(), full, "{config}");
    }
}

#[test]
fn closed_form_bounds_sandwich_the_region() {
    for p in 1..=5usize {
        for d in 1..=p.min(3) {
            let config = CsitConfig::ordered(p, d, 0);
            let value = outer_bound_sumdof(&config).unwrap();
            let b = prop1_bounds(p, d).unwrap();
            assert!(b.lower <= value && value <= b.upper, "P={p} D={d}");
            assert!(b.gap <= b.cap);
        }
    }
    assert_eq!(prop1_bounds(2, 1).unwrap().upper, ratio(9, 4));
    assert_eq!(prop1_bounds(2, 0).unwrap().upper, rat(2));
    assert!(matches!(prop1_bounds(1, 2), Err(RegionError::Regime(_))));
}

#[test]
fn averaged_inequality_holds_at_vertices() {
    for s in ["PD", "PDD", "PPD", "PPDD", "PDDD", "PPPD"] {
        let config = cfg(s);
        let region = build_region(&config).unwrap();
        let avg = averaged_inequality(&config).unwrap();
        for v in vertices(&region).unwrap() {
            assert!(avg.satisfied(&v), "{s} at {v:?}");
        }
    }
}

#[test]
fn averaged_coefficients_are_the_family_mean() {
    // Oracle: average the delayed-receiver rows whose ordering lists the P
    // receivers first, over every choice of i and both orderings.
    for s in ["PD", "PPD", "PPDD", "PPPDD", "PDDD"] {
        let config = cfg(s);
        let (ps, ds) = (config.p_set(), config.d_set());
        let mut sum = vec![Rational::zero(); config.k()];
        let mut count = 0i64;
        for &i in &ds {
            let rest: Vec<usize> = ds.iter().copied().filter(|&j| j != i).collect();
            for pp in ps.iter().copied().permutations(ps.len()) {
                for dp in rest.iter().copied().permutations(rest.len()) {
                    sum[i] += Rational::one();
                    for (pos, &j) in pp.iter().chain(&dp).enumerate() {
                        sum[j] += ratio(1, 1 << (pos + 1));
                    }
                    count += 1;
                }
            }
        }
        let total = rat(count);
        let mean: Vec<Rational> = sum.into_iter().map(|x| x / &total).collect();
        assert_eq!(averaged_inequality(&config).unwrap().coefficients, mean, "{s}");
    }
}

#[test]
fn explicit_regions_capped() {
    assert!(matches!(build_region(&CsitConfig::ordered(4, 4, 0)), Err(RegionError::TooLarge { .. })));
    assert!(outer_bound_sumdof(&CsitConfig::ordered(4, 4, 0)).is_ok());
}

#[test]
fn labels() {
    assert_eq!(build_region(&cfg("PDD")).unwrap().label(), "exact region (k = 3)");
    assert_eq!(build_region(&cfg("PDDD")).unwrap().label(), "outer bound (k != 3)");
}
