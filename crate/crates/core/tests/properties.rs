use pconet_core::tensor::{conv2d_forward, conv2d_forward_direct, maxpool2d_backward, maxpool2d_forward};
use pconet_core::{report, ConfusionMatrix, Tensor};
use proptest::prelude::*;

fn tensor(shape: Vec<usize>) -> impl Strategy<Value = Tensor<f64>> {
    let n: usize = shape.iter().product();
    prop::collection::vec(-1.0f64..1.0, n).prop_map(move |v| Tensor::new(&shape, v).unwrap())
}

fn conv_case() -> impl Strategy<Value = (Tensor<f64>, Tensor<f64>, Tensor<f64>, Tensor<f64>, usize)> {
    (
        1usize..3,
        3usize..8,
        3usize..8,
        1usize..4,
        1usize..4,
        1usize..4,
        1usize..3,
    )
        .prop_flat_map(|(n, h, w, cin, cout, k, stride)| {
            let k = k.min(h).min(w);
            (
                tensor(vec![n, h, w, cin]),
                tensor(vec![n, h, w, cin]),
                tensor(vec![k, k, cin, cout]),
                tensor(vec![cout]),
                Just(stride),
            )
        })
}

fn counts() -> impl Strategy<Value = [[u64; 2]; 2]> {
    prop::array::uniform2(prop::array::uniform2(0u64..500))
        .prop_filter("non-empty", |c| c.iter().flatten().sum::<u64>() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conv_fast_path_equals_direct((x, _, k, b, s) in conv_case()) {
        let fast = conv2d_forward(&x, &k, &b, s).unwrap();
        let direct = conv2d_forward_direct(&x, &k, &b, s).unwrap();
        prop_assert_eq!(fast.shape(), direct.shape());
        for (a, d) in fast.data().iter().zip(direct.data()) {
            prop_assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_is_linear_in_input((x1, x2, k, _, s) in conv_case(), alpha in -2.0f64..2.0) {
        let zero = Tensor::zeros(&[k.shape()[3]]).unwrap();
        let mut mixed = x2.scale(alpha);
        mixed.add_assign(&x1).unwrap();
        let lhs = conv2d_forward(&mixed, &k, &zero, s).unwrap();
        let mut rhs = conv2d_forward(&x2, &k, &zero, s).unwrap().scale(alpha);
        rhs.add_assign(&conv2d_forward(&x1, &k, &zero, s).unwrap()).unwrap();
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn maxpool_backward_conserves_gradient(x in (1usize..3, 2usize..9, 2usize..9, 1usize..4).prop_flat_map(|(n, h, w, c)| tensor(vec![n, h, w, c]))) {
        let pooled = maxpool2d_forward(&x, 2, 2).unwrap();
        let g = Tensor::from_fn(pooled.output.shape(), |i| 1.0 + i as f64).unwrap();
        let back = maxpool2d_backward(&pooled.argmax, &g, x.shape()).unwrap();
        prop_assert!((back.sum() - g.sum()).abs() < 1e-9);
        prop_assert_eq!(back.data().iter().filter(|v| **v != 0.0).count(), g.len());
    }

    #[test]
    fn report_is_relabel_equivariant(c in counts()) {
        let cm = ConfusionMatrix::from_counts(c);
        let r = report(&cm).unwrap();
        let s = report(&cm.swapped()).unwrap();
        prop_assert!((r.accuracy - s.accuracy).abs() < 1e-12);
        for k in 0..2 {
            let (a, b) = (&r.classes[k], &s.classes[1 - k]);
            prop_assert_eq!(a.support, b.support);
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
            prop_assert!((a.recall - b.recall).abs() < 1e-12);
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn support_weighted_recall_is_accuracy(c in counts()) {
        let r = report(&ConfusionMatrix::from_counts(c)).unwrap();
        let total: u64 = c.iter().flatten().sum();
        let weighted: f64 = r.classes.iter().map(|k| k.recall * k.support as f64).sum::<f64>() / total as f64;
        prop_assert!((weighted - r.accuracy).abs() < 1e-12);
    }
}
