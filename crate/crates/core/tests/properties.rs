//! Cross-module invariants on randomly generated certified families.

mod common;

use common::*;
use compind::gen::{path_model, random_detour_model};
use compind::ioeq::structure_signature;
use compind::rules::godfrey_rules;
use compind::transforms::enumerate_family;
use compind::verify::{compare, verify_permutation, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Certified renamings work in both directions and preserve both the
/// structure signature and the geometric rule quantities, and the compare
/// pipeline recovers a renaming for every family pair.
#[test]
fn certified_families_behave_like_an_equivalence() {
    let mut families = vec![
        enumerate_family(&path_model(4, Some(2)), 5).unwrap(),
        enumerate_family(&path3_leak(1), 4).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    while families.len() < 4 {
        let n = rng.gen_range(4..=6);
        let d = rng.gen_range(1..=2);
        let m = random_detour_model(&mut rng, n, d);
        if m.leaks().is_empty() {
            if let Ok(f) = enumerate_family(&m, 4) {
                if f.len() >= 2 {
                    families.push(f);
                }
            }
        }
    }

    for family in &families {
        let (root, _) = &family[0];
        let root_sig = structure_signature(root).unwrap();
        for (member, phi) in family {
            assert_eq!(verify_permutation(root, member, phi), Ok(true));
            // Symmetry through the inverse.
            assert_eq!(verify_permutation(member, root, &phi.inverse()), Ok(true));
            // Renaming-indistinguishable models share signatures and rules.
            assert_eq!(structure_signature(member).unwrap(), root_sig);
            assert!(godfrey_rules(root, member).unwrap().overall());
        }
        // Transitivity: compose two hops and re-verify.
        if family.len() >= 3 {
            let (m1, phi1) = &family[1];
            let (m2, phi2) = &family[2];
            let hop = phi1.inverse().compose(phi2).unwrap();
            assert_eq!(verify_permutation(m1, m2, &hop), Ok(true));
        }
        // The comparison pipeline finds a renaming for every pair.
        for (a, _) in family {
            for (b, _) in family {
                match compare(a, b).unwrap() {
                    Verdict::PermutationIndistinguishable(found) => {
                        assert_eq!(verify_permutation(a, b, &found), Ok(true));
                    }
                    other => panic!(
                        "family pair must compare as renaming-indistinguishable, got {other:?}"
                    ),
                }
            }
        }
    }
}

/// The transform certifications hold across independent seeds, not just the
/// acceptance suite's fixed one.
#[test]
fn transforms_certify_across_seeds() {
    use compind::gen::random_path_leak_model;
    use compind::transforms::{match_skeletal_path, move_leak, shift_detour, PathShape};

    for seed in [3u64, 1301, 77777] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shifts = 0;
        let mut attempts = 0;
        while shifts < 10 && attempts < 200 {
            attempts += 1;
            let n = rng.gen_range(4..=7);
            let d = rng.gen_range(1..=3);
            let m = random_detour_model(&mut rng, n, d);
            let Ok(w) = match_skeletal_path(&m) else {
                continue;
            };
            if let Ok((shifted, phi)) = shift_detour(&m, &w) {
                assert_eq!(
                    verify_permutation(&m, &shifted, &phi),
                    Ok(true),
                    "seed {seed}: {}",
                    m.to_json()
                );
                shifts += 1;
            }
        }
        assert!(shifts >= 10, "seed {seed}: only {shifts} shifts certified");

        for _ in 0..10 {
            let n = rng.gen_range(2..=7);
            let m = random_path_leak_model(&mut rng, n);
            let w = match_skeletal_path(&m).unwrap();
            let PathShape::Leaks { positions } = &w.shape else {
                panic!("expected a leaky path");
            };
            let i = positions[0];
            let j = rng.gen_range(1..n);
            let (moved, phi) = move_leak(&m, i, j).unwrap();
            assert_eq!(verify_permutation(&m, &moved, &phi), Ok(true));
        }
    }
}

/// Moving a leak onto the output changes the equation structure, so families
/// never contain that model.
#[test]
fn families_exclude_output_leaks() {
    for n in 2..=5 {
        let family = enumerate_family(&path_model(n, Some(1)), n + 1).unwrap();
        assert_eq!(family.len(), n);
        for (member, _) in &family {
            assert!(!member.leaks().contains(&n));
        }
    }
}
