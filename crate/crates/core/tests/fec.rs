use std::collections::HashSet;

use psqam::fec::gf2::BitMatrix;
use psqam::fec::{build_code, CodeDefinition, CodeSpec, LlrFrame, SparseMatrix, LLR_CLIP};
use psqam::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn code() -> CodeDefinition {
    build_code(&CodeSpec::default()).unwrap()
}

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

#[test]
fn dimensions_and_rank() {
    let c = code();
    assert_eq!((c.n(), c.k(), c.parity_bits()), (3456, 2880, 576));
    assert_eq!((c.rate().num(), c.rate().den()), (5, 6));
    let h = c.parity_check();
    let mut dense = BitMatrix::zeros(h.num_rows(), h.num_cols());
    for (r, row) in h.rows().enumerate() {
        for &col in row {
            dense.set(r, col as usize, true);
        }
    }
    assert_eq!(dense.rank(), 576);
}

#[test]
fn no_four_cycles() {
    // Two rows sharing two columns close a 4-cycle; each column pair may
    // therefore appear in at most one row.
    let c = code();
    let mut pairs = HashSet::new();
    for row in c.parity_check().rows() {
        for (i, &a) in row.iter().enumerate() {
            for &b in &row[i + 1..] {
                assert!(pairs.insert((a.min(b), a.max(b))), "columns {a} and {b} share two checks");
            }
        }
    }
}

#[test]
fn column_weights() {
    let c = code();
    let mut weight = vec![0usize; c.n()];
    for row in c.parity_check().rows() {
        for &col in row {
            weight[col as usize] += 1;
        }
    }
    assert!(weight[..2880].iter().all(|&w| w == 3));
    assert!(weight[2880..3024].iter().all(|&w| w == 3));
    assert!(weight[3024..].iter().all(|&w| w == 2));
}

#[test]
fn random_codewords_have_zero_syndrome() {
    let c = code();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let info = random_bits(&mut rng, c.k());
        let cw = c.encode(&info).unwrap();
        assert_eq!(&cw[..c.k()], &info[..]);
        assert!(c.syndrome(&cw).iter().all(|&s| s == 0));
    }
}

#[test]
fn encoder_is_linear() {
    let c = code();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let a = random_bits(&mut rng, c.k());
        let b = random_bits(&mut rng, c.k());
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let (ca, cb, cab) = (c.encode(&a).unwrap(), c.encode(&b).unwrap(), c.encode(&ab).unwrap());
        assert!(ca.iter().zip(&cb).zip(&cab).all(|((x, y), z)| x ^ y == *z));
    }
}

#[test]
fn construction_is_deterministic() {
    let a = code();
    let b = code();
    assert_eq!(a.export(), b.export());
    assert_eq!(a.code_hash(), b.code_hash());
    assert_eq!(a.code_hash().len(), 64);

    let parsed = SparseMatrix::from_text(&a.export()).unwrap();
    let again = CodeDefinition::from_parity_check(*a.spec(), parsed).unwrap();
    assert_eq!(again.code_hash(), a.code_hash());

    let other = build_code(&CodeSpec {
        seed: 1,
        ..CodeSpec::default()
    })
    .unwrap();
    assert_ne!(other.code_hash(), a.code_hash());
}

#[test]
fn noiseless_llrs_decode_immediately() {
    let c = code();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
    let llrs = LlrFrame::new(cw.iter().map(|&b| if b == 0 { LLR_CLIP } else { -LLR_CLIP }).collect());
    let out = c.decode(&llrs, 50).unwrap();
    assert!(out.converged);
    assert!(out.iterations <= 1);
    assert_eq!(out.bits, cw);
    assert_eq!(out.info_bits(&c), &cw[..c.k()]);
}

#[test]
fn erasure_frame_does_not_converge() {
    let c = code();
    let out = c.decode(&LlrFrame::new(vec![0.0; c.n()]), 50).unwrap();
    assert!(!out.converged);
    assert_eq!(out.iterations, 50);
}

#[test]
fn wrong_llr_length() {
    let c = code();
    assert!(matches!(
        c.decode(&LlrFrame::new(vec![1.0; 10]), 5),
        Err(Error::Framing { expected: 3456, actual: 10, .. })
    ));
}

#[test]
fn corrects_a_few_flipped_bits() {
    let c = code();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
    let mut llrs: Vec<f64> = cw.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
    for _ in 0..20 {
        let i = rng.random_range(0..c.n());
        llrs[i] = -llrs[i];
    }
    let out = c.decode(&LlrFrame::new(llrs), 50).unwrap();
    assert!(out.converged);
    assert_eq!(out.bits, cw);
}

#[test]
fn bpsk_well_above_capacity_limit() {
    // Real-valued BPSK with noise variance nv/2, far above the rate-5/6 limit.
    let c = code();
    let nv = 10f64.powf(-0.4);
    let sigma = (nv / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut ok = 0;
    for _ in 0..50 {
        let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
        let llrs = cw
            .iter()
            .map(|&b| {
                let x = 1.0 - 2.0 * b as f64;
                let y = x + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
                2.0 * y / (sigma * sigma)
            })
            .collect();
        let out = c.decode(&LlrFrame::new(llrs), 50).unwrap();
        ok += (out.converged && out.bits == cw) as usize;
    }
    assert_eq!(ok, 50);
}
