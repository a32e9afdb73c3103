mod oracles;

use mltqnn_core::autoencoder::{patchify, unpatchify, ImageTensor, PatchAutoencoder};
use oracles::{naive_decode, naive_encode, random_vec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn forward_passes_match_naive_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (patch, channels, e) in [(2, 1, 3), (4, 4, 9), (4, 3, 9), (8, 3, 6), (16, 2, 3), (32, 3, 9)] {
        let ae = PatchAutoencoder::new(patch, channels, e).unwrap();
        for _ in 0..3 {
            let p = ae.init(&mut rng);
            let (enc, dec) = p.split_at(ae.encoder_len());
            let x = random_vec(&mut rng, ae.patch_len(), 0.0, 1.0);
            let f = ae.encode(&x, enc).unwrap();
            let want = naive_encode(&x, patch, channels, e, enc);
            assert!(f.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-12), "encode P={patch}");
            let y = ae.decode(&f, dec).unwrap();
            let want = naive_decode(&f, patch, channels, dec);
            assert_eq!(y.len(), patch * patch * channels);
            assert!(y.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-12), "decode P={patch}");
        }
    }
}

#[test]
fn sat6_budget() {
    let ae = PatchAutoencoder::new(4, 4, 9).unwrap();
    assert_eq!((ae.encoder_len(), ae.decoder_len()), (301, 376));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outputs_stay_bounded(seed in any::<u64>(), scale in 0.1..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ae = PatchAutoencoder::new(4, 3, 9).unwrap();
        let p: Vec<f64> = ae.init(&mut rng).iter().map(|v| v * scale).collect();
        let (enc, dec) = p.split_at(ae.encoder_len());
        let x = random_vec(&mut rng, ae.patch_len(), 0.0, 1.0);
        let f = ae.encode(&x, enc).unwrap();
        prop_assert!(f.iter().all(|v| (0.0..=PI).contains(v)));
        let y = ae.decode(&f, dec).unwrap();
        prop_assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn patchify_round_trips(seed in any::<u64>(), g in 0u32..4, patch_log in 0u32..3, channels in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (1usize << g) << patch_log;
        let img = ImageTensor::new(n, channels, random_vec(&mut rng, n * n * channels, 0.0, 1.0)).unwrap();
        let grid = patchify(&img, 1 << patch_log).unwrap();
        prop_assert_eq!(grid.patches.len(), 1 << (2 * g));
        prop_assert_eq!(unpatchify(&grid), img);
    }

    #[test]
    fn encoding_is_patch_local(seed in any::<u64>()) {
        // Changing one patch of the image changes only that patch's features.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ae = PatchAutoencoder::new(4, 2, 3).unwrap();
        let p = ae.init(&mut rng);
        let enc = &p[..ae.encoder_len()];
        let mut values = random_vec(&mut rng, 8 * 8 * 2, 0.0, 1.0);
        let a = patchify(&ImageTensor::new(8, 2, values.clone()).unwrap(), 4).unwrap();
        values[0] = 1.0 - values[0];
        let b = patchify(&ImageTensor::new(8, 2, values).unwrap(), 4).unwrap();
        for s in 1..4 {
            prop_assert_eq!(ae.encode(&a.patches[s], enc).unwrap(), ae.encode(&b.patches[s], enc).unwrap());
        }
    }
}
