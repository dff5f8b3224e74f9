use mcfil::attack::{export_benchmarks, run_attack, AttackConfig, BruteForcePolicy, Status, MANIFEST_FILE};
use mcfil::cnf::read_dimacs;
use mcfil::functionalities::{by_name, millionaires, random_bits, Functionality};
use mcfil::oracle::LocalOracle;
use mcfil::sat::{solve, Backend, SolveStatus, SolverConfig};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn refsat() -> Backend {
    Backend::External(vec![env!("CARGO_BIN_EXE_refsat").to_string(), "{cnf_path}".to_string()])
}

fn attack(f: &Functionality, target: &BigUint, cfg: &AttackConfig) -> mcfil::attack::AttackState {
    let mut o = LocalOracle::new(f.clone(), target.clone());
    run_attack(f, &mut o, cfg).unwrap()
}

#[test]
fn three_iteration_export() {
    let f = millionaires(8).unwrap();
    let cfg = AttackConfig {
        max_iters: Some(3),
        ..Default::default()
    };
    let s = attack(&f, &BigUint::from(77u32), &cfg);
    assert_eq!(s.status, Status::Exhausted);
    let dir = tempfile::tempdir().unwrap();
    let files = export_benchmarks(&s, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let mut last_vars = 0;
    for p in &files {
        let g = read_dimacs(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert!(g.num_vars >= last_vars, "{}", p.display());
        last_vars = g.num_vars;
        for backend in [Backend::Builtin, refsat()] {
            let cfg = SolverConfig {
                backend,
                ..Default::default()
            };
            assert_eq!(
                solve(&g, &[], &cfg).unwrap().status,
                SolveStatus::Sat,
                "{}",
                p.display()
            );
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    let rows = manifest.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r["iter"], i + 1);
        assert_eq!(r["width"], 8);
        assert_eq!(r["name"], "millionaires");
    }
}

#[test]
fn first_comparison_query_is_near_half() {
    let f = millionaires(8).unwrap();
    let mut firsts = Vec::new();
    for seed in 0..20 {
        let cfg = AttackConfig {
            max_iters: Some(1),
            ..Default::default()
        }
        .with_seed(seed);
        let s = attack(&f, &BigUint::from(200u32), &cfg);
        let r = &s.history[0];
        let c: u32 = (&r.chosen).try_into().unwrap();
        // class sizes by brute force: t < c and t >= c
        let below = (0u32..256).filter(|&t| t < c).count() as u32;
        let min = below.min(256 - below);
        assert!(min >= 1 << (r.k_max - 2), "seed {seed}: {c} at k_max {}", r.k_max);
        firsts.push(c);
    }
    firsts.sort();
    let median = firsts[firsts.len() / 2];
    assert!((96..=160).contains(&median), "{firsts:?}");
}

#[test]
fn survivors_shrink_and_keep_the_truth() {
    let p = std::collections::BTreeMap::new();
    for name in ["millionaires", "mean_average", "wage_circuit"] {
        let f = by_name(name, Some(8), &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..3 {
            let t = random_bits(&mut rng, 8);
            let cfg = AttackConfig {
                exact_trace: true,
                ..Default::default()
            }
            .with_seed(seed);
            let s = attack(&f, &t, &cfg);
            let mut prev = BigUint::from(256u32);
            for r in &s.history {
                assert!(r.remaining.count <= prev, "{name}");
                prev = r.remaining.count.clone();
            }
            assert!(s.constraints.consistent(f.circuit(), &t), "{name}: truth eliminated");
            if s.status == Status::Unique {
                assert_eq!(s.witness.as_ref(), Some(&t));
            }
        }
    }
}

#[test]
fn auction_reveals_most_target_bits() {
    let p = [("prices", 7), ("units", 2), ("hb", 0), ("hs", 1), ("ab", 3), ("as", 0)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v as u64))
        .collect();
    let f = by_name("sugar_beets", None, &p).unwrap();
    let tw = f.target_width();
    assert_eq!(tw, 14);
    let t = random_bits(&mut ChaCha8Rng::seed_from_u64(1), tw);
    let cfg = AttackConfig {
        on_bruteforce: BruteForcePolicy::Continue,
        ..Default::default()
    };
    let s = attack(&f, &t, &cfg);
    // bits shared by every survivor
    let survivors: Vec<u64> = (0u64..1 << tw)
        .filter(|&x| s.constraints.consistent(f.circuit(), &BigUint::from(x)))
        .collect();
    assert!(survivors.contains(&t.iter_u64_digits().next().unwrap_or(0)));
    let known = (0..tw)
        .filter(|&i| survivors.iter().all(|x| (x >> i & 1) == (survivors[0] >> i & 1)))
        .count();
    assert!(known >= 8, "{known} bits known, {} survivors", survivors.len());
}
