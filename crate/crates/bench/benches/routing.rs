use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hyperroute::adaptive::{DisplacementMetric, DisplacementState};
use hyperroute::algebraic::{cayley_spectrum_characters, FamilyKind, GeneratorFamily};
use hyperroute::graphs::{build_random_regular_graph, build_random_regular_hypergraph};
use hyperroute::rng::{random_permutation, substream};
use hyperroute::route::{route_with_oracle, valiant_paths, PathOracle, SigmaStrategy};
use hyperroute::spectral::{spectrum, spectrum_extreme};

fn constructions(c: &mut Criterion) {
    c.bench_function("random 8-regular graph N=1024", |b| b.iter(|| build_random_regular_graph(black_box(1024), 8, 1).unwrap()));
    c.bench_function("random (8,3) hypergraph N=1023", |b| b.iter(|| build_random_regular_hypergraph(black_box(1023), 8, 3, 1).unwrap()));
}

fn spectra(c: &mut Criterion) {
    let g = build_random_regular_graph(256, 8, 0).unwrap();
    c.bench_function("dense spectrum N=256", |b| b.iter(|| spectrum(black_box(&g)).unwrap()));
    let big = build_random_regular_graph(4096, 8, 0).unwrap();
    c.bench_function("extreme eigenvalues N=4096", |b| b.iter(|| spectrum_extreme(black_box(&big)).unwrap()));
    let gens = GeneratorFamily::new(FamilyKind::Qr, 31, 8).unwrap().generators();
    c.bench_function("character spectrum Z_31^2", |b| b.iter(|| cayley_spectrum_characters(31, black_box(&gens)).unwrap()));
}

fn routing(c: &mut Criterion) {
    let g = build_random_regular_graph(256, 8, 0).unwrap();
    let oracle = PathOracle::new(&g).unwrap();
    let pi = random_permutation(256, &mut substream(0, "bench", 0));
    c.bench_function("path oracle N=256", |b| b.iter(|| PathOracle::new(black_box(&g)).unwrap()));
    c.bench_function("valiant paths N=256", |b| b.iter(|| valiant_paths(&oracle, black_box(&pi), &SigmaStrategy::Uniform, 0).unwrap()));
    c.bench_function("realized schedule N=256", |b| b.iter(|| route_with_oracle(&oracle, black_box(&pi), &SigmaStrategy::Uniform, 0, None).unwrap()));
    let state = DisplacementState::new(&pi, DisplacementMetric::GridManhattan { n: 16 }).unwrap();
    c.bench_function("greedy displacement matching N=256", |b| b.iter(|| black_box(&state).greedy_matching(&g)));
}

criterion_group!(benches, constructions, spectra, routing);
criterion_main!(benches);
