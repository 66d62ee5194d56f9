use gnrr_core::corpus::Qrels;
use gnrr_core::features::{augment_with_rank, node_features};
use gnrr_core::gnn::{LayerKind, ModelConfig, RerankModel};
use gnrr_core::graph::CorpusGraph;
use gnrr_core::lexical::{InvertedIndex, DEFAULT_B, DEFAULT_K1};
use gnrr_core::synth::{generate, SynthConfig};
use gnrr_core::training::{mean_ndcg, train, PreparedQuery, TrainConfig, VALIDATION_K};

struct Task {
    model: RerankModel,
    train: Vec<PreparedQuery>,
    val: Vec<PreparedQuery>,
}

fn small_task(kind: LayerKind, seed: u64) -> Task {
    let corpus = generate(&SynthConfig::new(800, 60, 16, 0.8, 5)).unwrap();
    let index = InvertedIndex::build(&corpus.collection, DEFAULT_K1, DEFAULT_B).unwrap();
    let doc_ids: Vec<String> = corpus.collection.iter().map(|(d, _)| d.to_string()).collect();
    let graph = CorpusGraph::build(&corpus.embeddings, &doc_ids, 8).unwrap();
    let mut config = ModelConfig::new(kind, 16);
    config.hidden = 8;
    config.scorer_hidden = 8;
    config.seed = seed;
    let model = RerankModel::new(config).unwrap();
    let prepare = |qrels: &Qrels, range: std::ops::Range<usize>| -> Vec<PreparedQuery> {
        corpus
            .queries
            .iter()
            .skip(range.start)
            .take(range.len())
            .filter_map(|(q, text)| {
                let list = index.retrieve_text(q, text, 50).unwrap();
                if list.is_empty() {
                    return None;
                }
                let sub = graph.induce(&list).unwrap();
                let x = node_features(&corpus.embeddings.get(q).unwrap(), &sub, &corpus.embeddings).unwrap();
                let x_aug = augment_with_rank(&x, &sub).unwrap();
                Some(PreparedQuery::new(&model, sub, x, x_aug, qrels).unwrap())
            })
            .collect()
    };
    let train = prepare(&corpus.qrels, 0..40);
    let val = prepare(&corpus.qrels, 40..60);
    Task { model, train, val }
}

fn config(epochs: usize, patience: usize) -> TrainConfig {
    TrainConfig { epochs, patience, learning_rate: 3e-3, seed: 1, ..TrainConfig::default() }
}

#[test]
fn training_is_deterministic() {
    let t = small_task(LayerKind::Gcn, 1);
    let (a, ra) = train(t.model.clone(), &t.train, &t.val, &config(6, 3)).unwrap();
    let (b, rb) = train(t.model.clone(), &t.train, &t.val, &config(6, 3)).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ra.to_text(), rb.to_text());
    assert_eq!(a.to_checkpoint(), b.to_checkpoint());
}

#[test]
fn returns_the_best_validation_epoch() {
    for kind in LayerKind::ALL {
        let t = small_task(kind, 2);
        let untrained = mean_ndcg(&t.model, &t.val, VALIDATION_K).unwrap();
        let (best, report) = train(t.model.clone(), &t.train, &t.val, &config(15, 4)).unwrap();
        let top = report.epochs.iter().map(|e| e.val_ndcg).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.best_val_ndcg(), top);
        assert_eq!(mean_ndcg(&best, &t.val, VALIDATION_K).unwrap(), top, "{kind}");
        assert!(report.epochs.iter().all(|e| e.loss.is_finite()));
        assert_eq!(report.epochs[0].epoch, 1);
        assert!(top > untrained, "{kind}: {top} vs untrained {untrained}");
    }
}

#[test]
fn empty_sets_and_bad_configs_are_errors() {
    let t = small_task(LayerKind::Gcn, 3);
    assert!(train(t.model.clone(), &[], &t.val, &config(1, 1)).is_err());
    assert!(train(t.model.clone(), &t.train, &[], &config(1, 1)).is_err());
    assert!(train(t.model.clone(), &t.train, &t.val, &config(0, 1)).is_err());
    assert!(train(t.model.clone(), &t.train, &t.val, &config(1, 0)).is_err());
    let bad_lr = TrainConfig { learning_rate: 0.0, ..config(1, 1) };
    assert!(train(t.model, &t.train, &t.val, &bad_lr).is_err());
}
