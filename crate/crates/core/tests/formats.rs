use clinbias::embed_io::{
    read_word2vec_binary, read_word2vec_text, write_word2vec_binary, write_word2vec_text,
    SourceKind, VectorStore,
};
use proptest::prelude::*;

fn store_strategy() -> impl Strategy<Value = VectorStore> {
    (1usize..12, 1usize..20).prop_flat_map(|(dim, n)| {
        proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, dim), n).prop_map(
            move |rows| {
                let entries = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (format!("tök_{i}"), v));
                VectorStore::from_entries(SourceKind::Static, entries).unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn text_round_trip_is_exact(store in store_strategy()) {
        let mut buf = Vec::new();
        write_word2vec_text(&store, &mut buf).unwrap();
        let back = read_word2vec_text(buf.as_slice()).unwrap();
        prop_assert_eq!(back.tokens(), store.tokens());
        for ((_, a), (_, b)) in store.iter().zip(back.iter()) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_round_trip_keeps_f32_precision(store in store_strategy()) {
        let mut buf = Vec::new();
        write_word2vec_binary(&store, &mut buf).unwrap();
        let back = read_word2vec_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(back.tokens(), store.tokens());
        for ((_, a), (_, b)) in store.iter().zip(back.iter()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(*x as f32 as f64, *y);
            }
        }
        // A second pass is lossless.
        let mut again = Vec::new();
        write_word2vec_binary(&back, &mut again).unwrap();
        prop_assert_eq!(again, buf);
    }
}
