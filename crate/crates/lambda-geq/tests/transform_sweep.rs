mod common;

use lambda_geq::sample::planted_instance;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn planted_solutions_survive_every_step() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut instances = 0;
    let mut failures = Vec::new();
    let mut steps = 0;
    while instances < 200 {
        let Some((g, u)) = planted_instance(&mut rng, 10, 8) else { continue };
        instances += 1;
        for o in common::sweep(&g, &u) {
            steps += 1;
            if let Some(f) = o.failure {
                failures.push(format!("{}\n{}: {f}", g.to_text(), o.name));
            }
            if (o.name == "d7" || o.name == "d8") && o.tau.1 > o.tau.0 {
                failures.push(format!("{}\n{}: tau {} -> {}", g.to_text(), o.name, o.tau.0, o.tau.1));
            }
        }
    }
    assert!(steps > 1000, "{steps} steps");
    assert!(failures.is_empty(), "{} failures, first:\n{}", failures.len(), failures.iter().take(3).cloned().collect::<Vec<_>>().join("\n---\n"));
}
