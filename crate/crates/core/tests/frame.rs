use nlse_core::frame::{Frame, FrameData, FrameMeta, HEADER_LEN};
use nlse_core::{ComplexField, GridSpec};
use proptest::prelude::*;

fn counts() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=3).prop_flat_map(|dim| proptest::collection::vec(3usize..=9, dim))
}

fn meta() -> impl Strategy<Value = FrameMeta> {
    (1e-4..1.0f64, -2.0..2.0f64, -2.0..2.0f64, 0.0..100.0f64, any::<u64>())
        .prop_map(|(k_dt, a, s, time, step_count)| FrameMeta { k_dt, a, s, time, step_count })
}

proptest! {
    #[test]
    fn write_read_write_is_byte_identical(
        counts in counts(),
        h in 0.01..2.0f64,
        meta in meta(),
        single in any::<bool>(),
        values in proptest::collection::vec(any::<f64>(), 2 * 729),
    ) {
        let grid = GridSpec::new(&counts, h, &vec![0.0; counts.len()]).unwrap();
        let n = grid.len();
        let field = ComplexField::<f64>::from_parts(grid, values[..n].to_vec(), values[n..2 * n].to_vec()).unwrap();
        let frame = if single { Frame::new(&field.cast::<f32>(), meta) } else { Frame::new(&field, meta) };

        let dir = std::env::temp_dir().join(format!("nlse-frame-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}.bin", n));
        frame.write_to(&path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = Frame::read_from(&path).unwrap();
        let second = back.encode();
        std::fs::remove_file(&path).ok();

        prop_assert_eq!(&first, &second);
        prop_assert_eq!(back.header, frame.header);
        let width = if single { 4 } else { 8 };
        prop_assert_eq!(first.len(), HEADER_LEN + 2 * n * width);
        match (&back.data, single) {
            (FrameData::Single(f), true) => prop_assert!(f.bit_eq(&field.cast::<f32>())),
            (FrameData::Double(f), false) => prop_assert!(f.bit_eq(&field)),
            _ => prop_assert!(false, "precision changed on round trip"),
        }
    }

    #[test]
    fn truncation_is_always_detected(cut in 1usize..200) {
        let grid = GridSpec::two_d(6, 5, 0.5, [0.0; 2]).unwrap();
        let field = ComplexField::<f64>::from_fn(grid, |x, y, _| (x, y));
        let meta = FrameMeta { k_dt: 0.01, a: 1.0, s: -1.0, time: 0.0, step_count: 0 };
        let bytes = Frame::new(&field, meta).encode();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(Frame::decode(&bytes[..keep]).is_err());
    }
}
