mod common;

use snore::eval::{run_label_propagation, run_protocol, run_protocol_with, run_random_baseline, ProtocolConfig};
use snore::{embed, EmbeddingConfig};

fn short_protocol() -> ProtocolConfig {
    ProtocolConfig { train_fractions: vec![0.2, 0.5], shuffles: 2, repetitions: 2, ..Default::default() }
}

#[test]
fn planted_partition_is_recovered() {
    let mut r = common::rng(13);
    let (g, labels) = common::block_model(&mut r, 600, 4, 2400, 0.1);
    let cfg = short_protocol();
    let e = embed(&g, &EmbeddingConfig::fixed(256)).unwrap();
    let snore = run_protocol(&e, &labels, &cfg).unwrap();
    let random = run_random_baseline(&labels, &cfg, 64).unwrap();
    let lp = run_label_propagation(&g, &labels, &cfg, 0.9).unwrap();
    // Four balanced classes: chance is 0.25.
    assert!(random.micro_mean < 0.35, "random {}", random.micro_mean);
    assert!(snore.micro_mean > 0.6, "snore {}", snore.micro_mean);
    assert!(lp.micro_mean > 0.6, "lp {}", lp.micro_mean);
    assert_eq!(snore.cells.len(), 2 * 2 * 2);
    for report in [&snore, &random, &lp] {
        for c in &report.cells {
            assert!((0.0..=1.0).contains(&c.micro_f1) && (0.0..=1.0).contains(&c.macro_f1));
        }
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let mut r = common::rng(14);
    let (g, labels) = common::block_model(&mut r, 300, 3, 900, 0.2);
    let cfg = short_protocol();
    let run = || {
        run_protocol_with(&labels, &cfg, "snore", |rep| {
            let mut ec = EmbeddingConfig::fixed(64);
            ec.walk.seed = snore::eval::repetition_seed(cfg.seed, rep);
            embed(&g, &ec)
        })
        .unwrap()
        .to_json()
    };
    assert_eq!(common::with_threads(1, run), common::with_threads(3, run));
}
