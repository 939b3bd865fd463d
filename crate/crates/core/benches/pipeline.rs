//! Sequential vs rayon execution of the batch entry points.

use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use lexsub::datasets::{DatasetManifest, Pos, TargetedExample};
use lexsub::estimators::Estimator;
use lexsub::injection::{profile_defaults, Profile, Task};
use lexsub::interchange::{EmbeddingTable, Vocabulary, WordPrior};
use lexsub::metrics::EvalMode;
use lexsub::par::Execution;
use lexsub::pipeline::{Injection, Pipeline, PipelineConfig};
use lexsub::postproc::{Lemmatizer, PostprocessOptions};
use lexsub::wsi::{self, SubstituteDocument, WsiInstance};

const VOCAB: usize = 8000;
const DIM: usize = 64;
const EXAMPLES: usize = 256;

fn pipeline(rng: &mut StdRng) -> (Pipeline, DatasetManifest) {
    let words: Vec<String> = (0..VOCAB).map(|i| format!("w{i}")).collect();
    let rows: Vec<Vec<f32>> = (0..VOCAB)
        .map(|_| (0..DIM).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect();
    let vocab = Arc::new(Vocabulary::new(words.clone()).unwrap());
    let emb = Arc::new(EmbeddingTable::from_rows(vocab, &rows).unwrap());
    let examples: Vec<TargetedExample> = (0..EXAMPLES)
        .map(|i| {
            let tokens: Vec<String> = (0..9).map(|_| words.choose(rng).unwrap().clone()).collect();
            let gold = (0..4).map(|_| (words.choose(rng).unwrap().clone(), rng.gen_range(1..4))).collect();
            TargetedExample {
                id: i.to_string(),
                target_surface: tokens[4].clone(),
                target_lemma: tokens[4].clone(),
                tokens,
                target_index: 4,
                pos: Pos::Noun,
                gold,
                candidates: None,
                dep_neighbors: None,
            }
        })
        .collect();
    let p = Pipeline {
        estimator: Estimator::Stub {
            emb: Arc::clone(&emb),
            window: 3,
        },
        right: None,
        target_embeddings: Some(emb),
        prior: WordPrior::flat(),
        lemmatizer: Arc::new(Lemmatizer::identity()),
        config: PipelineConfig {
            injection: Injection::Embs,
            fusion: profile_defaults(Profile::Bert, Task::Lexsub).fusion,
            bcomb: None,
            postproc: PostprocessOptions::default(),
        },
    };
    (p, DatasetManifest::new("bench", examples))
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench_rank(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(1);
    let (p, m) = pipeline(&mut rng);
    let mut group = c.benchmark_group("rank_all");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, EXAMPLES), &exec, |b, &exec| {
            b.iter(|| black_box(p.rank_all(&m.examples, 10, exec)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("evaluate_candidates");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, EXAMPLES), &exec, |b, &exec| {
            b.iter(|| black_box(p.evaluate(&m, "bench", EvalMode::Candidates, false, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_wsi(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(2);
    let pool: Vec<String> = (0..2000).map(|i| format!("s{i}")).collect();
    let mut instances = Vec::new();
    let mut docs = Vec::new();
    for l in 0..32 {
        let lemma = format!("lemma{l}");
        for i in 0..60 {
            let id = format!("{lemma}.{i}");
            let sense = rng.gen_range(0..3);
            let slice = &pool[sense * 600..sense * 600 + 600];
            docs.push(SubstituteDocument {
                instance_id: id.clone(),
                lemmas: slice.choose_multiple(&mut rng, 200).cloned().collect(),
            });
            instances.push(WsiInstance {
                id: id.clone(),
                lemma: lemma.clone(),
                pos: Pos::Noun,
                example: TargetedExample {
                    id,
                    tokens: vec![lemma.clone()],
                    target_index: 0,
                    target_surface: lemma.clone(),
                    target_lemma: lemma.clone(),
                    pos: Pos::Noun,
                    gold: Default::default(),
                    candidates: None,
                    dep_neighbors: None,
                },
                gold_sense: sense.to_string(),
                gold_graded: None,
            });
        }
    }
    let mut group = c.benchmark_group("cluster_all");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, instances.len()), &exec, |b, &exec| {
            b.iter(|| black_box(wsi::cluster_all(&instances, &docs, None, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rank, bench_wsi);
criterion_main!(benches);
