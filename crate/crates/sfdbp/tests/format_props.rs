//! Property tests for the file formats: arbitrary rasters round-trip
//! exactly.

use proptest::prelude::*;
use sfdbp::pnm::{read_pfm, read_pgm, write_pfm, write_pgm, Pgm};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgm16_roundtrips_any_raster(
        w in 1usize..12,
        h in 1usize..12,
        seed in any::<u64>(),
    ) {
        let mut s = seed | 1;
        let data: Vec<u16> = (0..w * h)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s % 65536) as u16
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.pgm");
        let pgm = Pgm::new(w, h, 65535, data).unwrap();
        write_pgm(&p, &pgm).unwrap();
        prop_assert_eq!(read_pgm(&p).unwrap(), pgm);
    }

    #[test]
    fn pfm_roundtrips_bit_exactly(
        w in 1usize..12,
        h in 1usize..12,
        vals in proptest::collection::vec(-1e6f32..1e6f32, 1..144),
    ) {
        let n = w * h;
        let data: Vec<f32> = (0..n).map(|i| vals[i % vals.len()]).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.pfm");
        write_pfm(&p, w, h, &data).unwrap();
        let (rw, rh, back) = read_pfm(&p).unwrap();
        prop_assert_eq!((rw, rh), (w, h));
        for (a, b) in data.iter().zip(&back) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
