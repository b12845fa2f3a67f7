//! The single-qutrit Clifford group on the symmetric subspace.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::linalg::{cis, C64, ONE, ZERO};

/// Number of Clifford elements modulo global phase, d^3 (d^2 - 1) for d = 3.
pub const GROUP_ORDER: usize = 216;

/// A qutrit Clifford in the ordered basis dd, (du+ud)/sqrt2, uu.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritClifford {
    pub index: usize,
    pub matrix: Matrix3<C64>,
}

type Key = [(i64, i64); 9];

/// Phase-insensitive hash key: the matrix is rotated so its first sizable entry is real and
/// positive, then rounded.
fn key(m: &Matrix3<C64>) -> Key {
    let lead = m.iter().find(|z| z.norm() > 1e-6).copied().unwrap_or(ONE);
    let ph = lead.conj() / lead.norm();
    let mut k = [(0i64, 0i64); 9];
    for (slot, z) in k.iter_mut().zip(m.iter()) {
        let w = z * ph;
        *slot = ((w.re * 1e6).round() as i64, (w.im * 1e6).round() as i64);
    }
    k
}

/// Operator distance between `a` and `b` after removing the best global phase.
pub fn phase_distance(a: &Matrix3<C64>, b: &Matrix3<C64>) -> f64 {
    let tr = (a.adjoint() * b).trace();
    let ph = if tr.norm() > 0.0 { tr.conj() / tr.norm() } else { ONE };
    (b * ph - a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn generators() -> [Matrix3<C64>; 4] {
    let w = cis(2.0 * PI / 3.0);
    let x = Matrix3::new(ZERO, ZERO, ONE, ONE, ZERO, ZERO, ZERO, ONE, ZERO);
    let z = Matrix3::from_diagonal(&nalgebra::Vector3::new(ONE, w, w * w));
    let r = C64::from(1.0 / 3f64.sqrt());
    let f = Matrix3::from_fn(|i, j| cis(2.0 * PI * (i * j) as f64 / 3.0) * r);
    let s = Matrix3::from_diagonal(&nalgebra::Vector3::new(ONE, ONE, w));
    [x, z, f, s]
}

/// The group with its multiplication and inverse tables.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<QutritClifford>,
    lookup: HashMap<Key, usize>,
    product: Vec<u16>,
    inverse: Vec<usize>,
}

impl CliffordGroup {
    /// Breadth-first closure of the generators, checked for closure and inverses.
    pub fn generate() -> Result<Self> {
        let gens = generators();
        let mut elements: Vec<QutritClifford> = Vec::new();
        let mut lookup = HashMap::new();
        let id = Matrix3::identity();
        lookup.insert(key(&id), 0);
        elements.push(QutritClifford { index: 0, matrix: id });
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let m = g * elements[i].matrix;
                let k = key(&m);
                if !lookup.contains_key(&k) {
                    let index = elements.len();
                    if index >= 4 * GROUP_ORDER {
                        return Err(Error::Invalid("clifford closure does not terminate".into()));
                    }
                    lookup.insert(k, index);
                    elements.push(QutritClifford { index, matrix: m });
                    queue.push_back(index);
                }
            }
        }
        let n = elements.len();
        if n != GROUP_ORDER {
            return Err(Error::Invalid(format!("clifford closure produced {n} elements, expected {GROUP_ORDER}")));
        }
        let mut product = vec![0u16; n * n];
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            for b in 0..n {
                let m = elements[a].matrix * elements[b].matrix;
                let Some(&c) = lookup.get(&key(&m)) else {
                    return Err(Error::Invalid(format!("product of elements {a} and {b} is outside the group")));
                };
                product[a * n + b] = c as u16;
                if c == 0 {
                    inverse[a] = b;
                }
            }
        }
        if let Some(a) = inverse.iter().position(|&v| v == usize::MAX) {
            return Err(Error::Invalid(format!("element {a} has no inverse")));
        }
        Ok(CliffordGroup { elements, lookup, product, inverse })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[QutritClifford] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> &QutritClifford {
        &self.elements[index]
    }

    /// Index of the element `a * b` (b acts first).
    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.product[a * self.len() + b] as usize
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Group index of a unitary equal to a Clifford up to phase.
    pub fn find(&self, m: &Matrix3<C64>) -> Option<usize> {
        self.lookup.get(&key(m)).copied()
    }
}

/// Shared instance of the group.
pub fn clifford_group() -> &'static CliffordGroup {
    static GROUP: std::sync::OnceLock<CliffordGroup> = std::sync::OnceLock::new();
    GROUP.get_or_init(|| match CliffordGroup::generate() {
        Ok(g) => g,
        Err(e) => panic!("qutrit clifford group construction failed: {e}"),
    })
}
