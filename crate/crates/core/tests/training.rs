use kgjoint::data::{make_cluster_kg, make_synthetic, ClusterKgParams, KnownTriples};
use kgjoint::eval::{evaluate, EvalOptions};
use kgjoint::joint::{train_joint, JointConfig, JointModel};
use kgjoint::literal::LiteralStore;
use kgjoint::numeric::SgdConfig;
use kgjoint::structural::{train_structural, train_structural_with, StructuralModel};
use kgjoint::training::Validation;

#[test]
fn lattice_is_learned_in_500_epochs_with_defaults() {
    let kg = make_synthetic(200, 16, 8, 0).unwrap();
    let known = KnownTriples::from_sets([&kg.train, &kg.valid, &kg.test]);
    let cfg = SgdConfig { epochs: 500, ..SgdConfig::default() };
    let out = train_structural(&kg.train, &kg.vocab, &cfg).unwrap();
    let report = evaluate(&out.model.scorer(), &kg.test, &known, &EvalOptions::default()).unwrap().report;
    assert!(report.all.hits10_filtered >= 0.5, "{report:?}");

    // Mean loss per 50-epoch window never rises by more than 5%.
    let windows: Vec<f64> = out.epoch_losses.chunks(50).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    for (i, w) in windows.windows(2).enumerate() {
        assert!(w[1] <= 1.05 * w[0], "window {}: {:?}", i + 1, windows);
    }
}

#[test]
fn early_stopping_returns_best_validation_snapshot() {
    let kg = make_synthetic(120, 8, 7, 4).unwrap();
    let known = KnownTriples::from_sets([&kg.train, &kg.valid, &kg.test]);
    let cfg = SgdConfig { epochs: 200, learning_rate: 0.01, dim: 20, ..SgdConfig::default() };
    let model = StructuralModel::<f32>::new(kg.vocab.n_entities(), kg.vocab.n_relations(), cfg).unwrap();
    let v = Validation { set: &kg.valid, known: &known, every: 10, patience: 3 };
    let out = train_structural_with(model, &kg.train, Some(&v)).unwrap();
    let best = out.best_valid_mr.unwrap();
    let epoch = out.best_epoch.unwrap();
    assert_eq!(epoch % 10, 0);
    let again = evaluate(&out.model.scorer(), &kg.valid, &known, &EvalOptions::default()).unwrap();
    assert_eq!(again.report.all.mr_filtered, best);
}

#[test]
fn zero_literals_still_give_finite_joint_scores() {
    let kg = make_cluster_kg(&ClusterKgParams { n_entities: 60, n_clusters: 6, ..ClusterKgParams::default() }).unwrap();
    let known = KnownTriples::from_sets([&kg.train, &kg.valid, &kg.test]);
    let cfg = SgdConfig { epochs: 20, dim: 12, ..SgdConfig::default() };
    let s = train_structural(&kg.train, &kg.vocab, &cfg).unwrap().model;
    let store = LiteralStore::zeros(kg.vocab.n_entities(), kg.vocab.n_relations(), 8);
    let joint = JointModel::new(&s, &store, JointConfig::new(SgdConfig { dim: 8, ..cfg })).unwrap();
    let joint = train_joint(joint, &kg.train).unwrap().model;
    assert!(joint.is_finite());
    let emb = joint.embed_all().unwrap();
    assert!(emb.heads.is_finite() && emb.tails.is_finite() && emb.relations.is_finite());
    let report = evaluate(&emb, &kg.test, &known, &EvalOptions::default()).unwrap().report;
    assert!(report.all.mr_filtered.is_finite());
}

#[test]
fn joint_projection_path_trains() {
    let kg = make_cluster_kg(&ClusterKgParams {
        n_entities: 60,
        n_clusters: 6,
        literal_dim: 16,
        ..ClusterKgParams::default()
    })
    .unwrap();
    let cfg = SgdConfig { epochs: 10, dim: 12, ..SgdConfig::default() };
    let s = train_structural(&kg.train, &kg.vocab, &cfg).unwrap().model;
    let store = LiteralStore::from_matrices(kg.entity_literals.clone(), kg.relation_literals.clone()).unwrap();
    let joint =
        JointModel::new(&s, &store, JointConfig::new(SgdConfig { dim: 4, learning_rate: 0.01, ..cfg })).unwrap();
    let before = joint.projection.clone().unwrap();
    let out = train_joint(joint, &kg.train).unwrap();
    let after = out.model.projection.unwrap();
    assert_eq!((after.dim_in(), after.dim_out()), (16, 4));
    assert_ne!(before.weight, after.weight);
    assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);
}
