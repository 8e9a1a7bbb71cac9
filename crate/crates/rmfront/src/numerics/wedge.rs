//! Second exterior power: the induced operator on Lambda^2 and the wedge
//! products and pairings the compound-matrix Evans evaluation needs.

use super::{C64, CMat, NumericsError};

/// Ordered index pairs for the Lambda^2(C^4) basis
/// e1^e2, e1^e3, e1^e4, e2^e3, e2^e4, e3^e4.
pub const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Ordered index pairs for the Lambda^2(C^3) basis e1^e2, e1^e3, e2^e3.
pub const PAIRS3: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn second_compound(a: &CMat, pairs: &[(usize, usize)]) -> CMat {
    let m = pairs.len();
    let mut w = CMat::zeros(m, m);
    for (ai, &(i, j)) in pairs.iter().enumerate() {
        for (bi, &(k, l)) in pairs.iter().enumerate() {
            let v = if (k, l) == (i, j) {
                a.get(i, i) + a.get(j, j)
            } else if k == i {
                a.get(j, l)
            } else if l == j {
                a.get(i, k)
            } else if l == i {
                -a.get(j, k)
            } else if k == j {
                -a.get(i, l)
            } else {
                C64::new(0.0, 0.0)
            };
            w.set(ai, bi, v);
        }
    }
    w
}

/// Operator induced by a 4x4 matrix on Lambda^2(C^4), acting by
/// (A x) ^ y + x ^ (A y), in the PAIRS4 basis.
pub fn wedge2(a: &CMat) -> Result<CMat, NumericsError> {
    if a.rows != 4 || a.cols != 4 {
        return Err(NumericsError::InvalidInput {
            op: "wedge2",
            msg: format!("need a 4x4 matrix, got {}x{}", a.rows, a.cols),
        });
    }
    Ok(second_compound(a, &PAIRS4))
}

/// Operator induced by a 3x3 matrix on Lambda^2(C^3), in the PAIRS3 basis.
pub fn wedge2_3(a: &CMat) -> Result<CMat, NumericsError> {
    if a.rows != 3 || a.cols != 3 {
        return Err(NumericsError::InvalidInput {
            op: "wedge2",
            msg: format!("need a 3x3 matrix, got {}x{}", a.rows, a.cols),
        });
    }
    Ok(second_compound(a, &PAIRS3))
}

/// Coordinates of x ^ y in the PAIRS4 basis.
pub fn wedge_vec4(x: &[C64], y: &[C64]) -> [C64; 6] {
    let mut out = [C64::new(0.0, 0.0); 6];
    for (n, &(i, j)) in PAIRS4.iter().enumerate() {
        out[n] = x[i] * y[j] - x[j] * y[i];
    }
    out
}

/// Coordinates of x ^ y in the PAIRS3 basis.
pub fn wedge_vec3(x: &[C64], y: &[C64]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (n, &(i, j)) in PAIRS3.iter().enumerate() {
        out[n] = x[i] * y[j] - x[j] * y[i];
    }
    out
}

/// Coefficient of e1^e2^e3^e4 in z ^ w for z, w in Lambda^2(C^4):
/// equals det[x1 x2 y1 y2] when z = x1^x2 and w = y1^y2.
pub fn pairing4(z: &[C64], w: &[C64]) -> C64 {
    z[0] * w[5] - z[1] * w[4] + z[2] * w[3] + z[3] * w[2] - z[4] * w[1] + z[5] * w[0]
}

/// Coefficient of e1^e2^e3 in z ^ v for z in Lambda^2(C^3), v in C^3.
pub fn pairing3(z: &[C64], v: &[C64]) -> C64 {
    z[0] * v[2] - z[1] * v[1] + z[2] * v[0]
}
