use std::collections::BTreeSet;

use gnrr_core::embeddings::EmbeddingStore;
use gnrr_core::graph::CorpusGraph;
use gnrr_core::lexical::ScoredList;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_store(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (EmbeddingStore, Vec<String>) {
    let mut store = EmbeddingStore::new(dim);
    // shuffled ids so that id order differs from insertion order
    let mut ids: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
    ids.shuffle(rng);
    for id in &ids {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        store.insert(id, &v).unwrap();
    }
    (store, ids)
}

/// All-pairs cosine, sorted by similarity then id.
fn oracle_neighbors(store: &EmbeddingStore, ids: &[String], u: usize, c: usize) -> Vec<String> {
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let zu = store.get(&ids[u]).unwrap();
    let mut others: Vec<(f64, &String)> =
        ids.iter().enumerate().filter(|&(v, _)| v != u).map(|(_, id)| (cos(&zu, &store.get(id).unwrap()), id)).collect();
    others.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1)));
    others.into_iter().take(c).map(|(_, id)| id.clone()).collect()
}

fn names(g: &CorpusGraph, u: usize) -> Vec<String> {
    g.neighbors(u).iter().map(|&v| g.node_ids()[v as usize].clone()).collect()
}

fn candidates(ids: &[&String]) -> ScoredList {
    let n = ids.len();
    ScoredList { query_id: "q".into(), entries: ids.iter().enumerate().map(|(i, d)| ((*d).clone(), (n - i) as f64)).collect() }
}

/// Random graph with the regularity invariant, built from arbitrary lists.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, c: usize) -> CorpusGraph {
    let ids: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
    let degree = c.min(n - 1);
    let lists = (0..n)
        .map(|u| {
            let mut others: Vec<u32> = (0..n as u32).filter(|&v| v as usize != u).collect();
            others.shuffle(rng);
            others.truncate(degree);
            others
        })
        .collect();
    CorpusGraph::from_lists(c, ids, lists).unwrap()
}

#[test]
fn knn_matches_all_pairs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..40 {
        let n = rng.random_range(2..30);
        let c = rng.random_range(1..10);
        let (store, ids) = random_store(&mut rng, n, 1 + trial % 6);
        let g = CorpusGraph::build(&store, &ids, c).unwrap();
        assert_eq!(g.degree(), c.min(n - 1));
        for u in 0..n {
            assert_eq!(names(&g, u), oracle_neighbors(&store, &ids, u, c), "trial {trial} node {u}");
            assert!(!g.neighbors(u).contains(&(u as u32)));
        }
    }
}

#[test]
fn collinear_vectors_with_one_neighbour() {
    let mut store = EmbeddingStore::new(2);
    store.insert("a", &[1.0, 0.0]).unwrap();
    store.insert("b", &[1.0, 0.1]).unwrap();
    store.insert("c", &[1.0, 0.3]).unwrap();
    let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let g = CorpusGraph::build(&store, &ids, 1).unwrap();
    for u in 0..3 {
        assert_eq!(names(&g, u), oracle_neighbors(&store, &ids, u, 1));
    }
    assert_eq!(names(&g, 0), ["b"]);
    assert_eq!(names(&g, 2), ["b"]);
}

#[test]
fn induce_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let c = rng.random_range(1..=10);
        let g = random_graph(&mut rng, n, c);
        let k = rng.random_range(1..=n);
        let mut picked: Vec<&String> = g.node_ids().choose_multiple(&mut rng, k).collect();
        picked.shuffle(&mut rng);
        let sub = g.induce(&candidates(&picked)).unwrap();

        // every corpus arc, checked by membership
        let pos = |id: &String| picked.iter().position(|p| *p == id);
        let mut arcs = BTreeSet::new();
        for u in 0..n {
            for &v in g.neighbors(u) {
                if let (Some(i), Some(j)) = (pos(&g.node_ids()[u]), pos(&g.node_ids()[v as usize])) {
                    arcs.insert((i as u32, j as u32));
                }
            }
        }
        let sym: BTreeSet<(u32, u32)> = arcs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        assert_eq!(sub.arcs.iter().copied().collect::<BTreeSet<_>>(), arcs);
        assert_eq!(sub.arcs.len(), arcs.len());
        assert_eq!(sub.edges, sym.into_iter().collect::<Vec<_>>());
        assert!(sub.arcs.len() <= c * k);
        assert_eq!(sub.nodes, picked.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        assert_eq!(sub.bm25_rank, (1..=k as u32).collect::<Vec<_>>());
    }
}

#[test]
fn shrinking_candidates_never_adds_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(3..40);
        let c = rng.random_range(1..9);
        let g = random_graph(&mut rng, n, c);
        let mut all: Vec<&String> = g.node_ids().iter().collect();
        all.shuffle(&mut rng);
        let small = &all[..rng.random_range(1..n)];
        let id_edges = |list: &[&String]| -> BTreeSet<(String, String)> {
            let sub = g.induce(&candidates(list)).unwrap();
            sub.edges.iter().map(|&(a, b)| (sub.nodes[a as usize].clone(), sub.nodes[b as usize].clone())).collect()
        };
        assert!(id_edges(small).is_subset(&id_edges(&all)));
    }
}

#[test]
fn thousand_candidates_keep_at_most_eight_thousand_arcs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (store, ids) = random_store(&mut rng, 3000, 8);
    let g = CorpusGraph::build(&store, &ids, 8).unwrap();
    let picked: Vec<&String> = ids.choose_multiple(&mut rng, 1000).collect();
    let sub = g.induce(&candidates(&picked)).unwrap();
    assert!(sub.arcs.len() <= 8000);
    // the whole corpus as candidates keeps every arc
    let everything: Vec<&String> = ids.iter().collect();
    assert_eq!(g.induce(&candidates(&everything)).unwrap().arcs.len(), 3000 * 8);
}

#[test]
fn persistence_preserves_induction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (store, ids) = random_store(&mut rng, 60, 4);
    let g = CorpusGraph::build(&store, &ids, 8).unwrap();
    let bytes = g.to_bytes().unwrap();
    let back = CorpusGraph::from_bytes(&bytes).unwrap();
    assert_eq!(back, g);
    let picked: Vec<&String> = ids[..25].iter().collect();
    assert_eq!(back.induce(&candidates(&picked)).unwrap(), g.induce(&candidates(&picked)).unwrap());

    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(CorpusGraph::from_bytes(&wrong).is_err());
    assert!(CorpusGraph::from_bytes(&bytes[..bytes.len() - 2]).is_err());
}

#[test]
fn unknown_candidate_is_named() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = random_graph(&mut rng, 5, 2);
    let stranger = "ghost".to_string();
    let err = g.induce(&candidates(&[&stranger])).unwrap_err().to_string();
    assert!(err.contains("ghost"), "{err}");
}

#[test]
fn fewer_than_two_documents_is_an_error() {
    let mut store = EmbeddingStore::new(2);
    store.insert("a", &[1.0, 0.0]).unwrap();
    assert!(CorpusGraph::build(&store, &["a".to_string()], 8).is_err());
}

#[test]
fn malformed_neighbour_lists_are_rejected() {
    let ids = || vec!["a".to_string(), "b".to_string(), "c".to_string()];
    assert!(CorpusGraph::from_lists(1, ids(), vec![vec![0], vec![0], vec![0]]).is_err()); // self-loop
    assert!(CorpusGraph::from_lists(2, ids(), vec![vec![1, 1], vec![0, 2], vec![0, 1]]).is_err()); // duplicate
    assert!(CorpusGraph::from_lists(2, ids(), vec![vec![1], vec![0, 2], vec![0, 1]]).is_err()); // short
    assert!(CorpusGraph::from_lists(2, ids(), vec![vec![1, 2], vec![0, 2], vec![0, 1]]).is_ok());
}
