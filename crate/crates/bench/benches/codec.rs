use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use anytime_core::index::codec::{decode_into, encode_block, PostingsBlock};

fn block(n: u32) -> PostingsBlock {
    PostingsBlock {
        docids: (0..n).map(|i| i * 7 + (i % 3)).collect(),
        tfs: (0..n).map(|i| 1 + i % 5).collect(),
    }
}

fn codec(c: &mut Criterion) {
    let b = block(128);
    let mut bytes = Vec::new();
    encode_block(&b, &mut bytes);
    let mut group = c.benchmark_group("codec");
    group.throughput(Throughput::Elements(128));
    group.bench_function("encode_128", |bench| {
        let mut out = Vec::with_capacity(bytes.len());
        bench.iter(|| {
            out.clear();
            encode_block(std::hint::black_box(&b), &mut out);
        })
    });
    group.bench_function("decode_128", |bench| {
        let (mut docs, mut tfs) = (Vec::with_capacity(128), Vec::with_capacity(128));
        bench.iter(|| decode_into(std::hint::black_box(&bytes), &mut docs, &mut tfs).unwrap())
    });
    group.finish();
}

criterion_group!(benches, codec);
criterion_main!(benches);
