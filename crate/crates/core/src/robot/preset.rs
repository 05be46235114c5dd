use crate::lti::{RationalTF, TFMatrix};

/// Third-order 2×2 controller reported for the `paper2r` scenario,
/// coefficients verbatim (descending powers of `s`).
pub const PAPER_2R_CONTROLLER: [[(&[f64], &[f64]); 2]; 2] = [
    [
        (&[1.07e5, 1.392e5, 44157.0], &[0.02, 4.0, 200.0, 1.0]),
        (&[264150.0, 5.362e5, 15849.0], &[0.08333, 13.33, 500.0, 1.0]),
    ],
    [
        (&[3.421e4, 4.447e4, 14454.0], &[0.01422, 3.556, 222.2, 1.0]),
        (&[1.172e5, 4.728e5, 16406.0], &[0.02319, 6.494, 454.6, 1.0]),
    ],
];

pub fn paper_2r_controller() -> TFMatrix {
    let rows = PAPER_2R_CONTROLLER
        .iter()
        .map(|row| {
            row.iter()
                .map(|(n, d)| RationalTF::new(n.to_vec(), d.to_vec()).expect("proper entries"))
                .collect()
        })
        .collect();
    TFMatrix::new(rows).expect("rectangular")
}
