use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wmh_core::metrics::{evaluate_case, hd95};
use wmh_core::morphology::connected_components;
use wmh_core::nifti::{decode_nifti, encode_nifti, ByteOrder, DataType, WriteOptions};
use wmh_core::phantom::{degrade_mask, generate_phantom, DegradeConfig, PhantomConfig};
use wmh_core::staple::staple;
use wmh_core::{BinaryMask3D, Connectivity, RaterStack, SizeBins, StapleParams, Volume3D};

fn case(dims: [usize; 3]) -> (Volume3D, BinaryMask3D, BinaryMask3D) {
    let cfg = PhantomConfig {
        seed: 1,
        dims,
        n_lesions: 30,
        radius_range: (1.0, 5.0),
        ..PhantomConfig::default()
    };
    let (flair, gt) = generate_phantom(&cfg).unwrap();
    let pred = degrade_mask(
        &gt,
        &DegradeConfig {
            seed: 2,
            erode_prob: 0.3,
            dilate_prob: 0.2,
            fp_blob_rate: 0.5,
        },
    )
    .unwrap();
    (flair, gt, pred)
}

fn bench(c: &mut Criterion) {
    let (flair, gt, pred) = case([128, 128, 96]);

    c.bench_function("connected_components_26", |b| {
        b.iter(|| connected_components(black_box(&gt), Connectivity::TwentySix))
    });
    c.bench_function("hd95", |b| {
        b.iter(|| hd95(black_box(&pred), black_box(&gt)).unwrap())
    });
    c.bench_function("evaluate_case", |b| {
        let bins = SizeBins::default();
        b.iter(|| {
            evaluate_case(
                black_box(&pred),
                black_box(&gt),
                Connectivity::TwentySix,
                &bins,
            )
            .unwrap()
        })
    });

    let masks: Vec<BinaryMask3D> = (0..3)
        .map(|k| {
            degrade_mask(
                &gt,
                &DegradeConfig {
                    seed: 10 + k,
                    erode_prob: 0.2,
                    dilate_prob: 0.2,
                    fp_blob_rate: 0.5,
                },
            )
            .unwrap()
        })
        .collect();
    let stack = RaterStack::new(masks).unwrap();
    let init = StapleParams::initial(&stack);
    c.bench_function("staple_3_raters", |b| {
        b.iter(|| staple(black_box(&stack), &init).unwrap())
    });

    let opts = WriteOptions {
        dtype: DataType::Float32,
        byte_order: ByteOrder::Little,
        gzip: true,
    };
    c.bench_function("nifti_encode_gz", |b| {
        b.iter(|| encode_nifti(black_box(&flair), opts).unwrap())
    });
    let bytes = encode_nifti(&flair, opts).unwrap();
    c.bench_function("nifti_decode_gz", |b| {
        b.iter(|| decode_nifti(black_box(&bytes)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench
}
criterion_main!(benches);
