//! Log-domain sum-product syndrome decoding.

use super::code::ParityCheckMatrix;

/// Outcome of one syndrome decoding attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    /// `H * bits == syndrome` at exit.
    pub converged: bool,
    pub iterations: usize,
    /// Positions where `bits` differs from the decoder input.
    pub corrections: usize,
}

const LLR_CLAMP: f64 = 40.0;
const PHI_MIN_ARG: f64 = 1e-12;

/// `phi(x) = -ln(tanh(x / 2))`, an involution on `(0, inf)`.
#[inline]
fn phi_exact(x: f64) -> f64 {
    let x = x.clamp(PHI_MIN_ARG, LLR_CLAMP);
    let e = (-x).exp();
    ((1.0 + e) / (1.0 - e)).ln()
}

// phi sampled on a log-spaced grid: the f32 bit patterns of [2^-40, 2^5)
// with 8 mantissa bits per cell, linearly interpolated inside each cell.
const TABLE_LOW_EXP: i32 = -40;
const TABLE_HIGH_EXP: i32 = 5;
const CELL_SHIFT: u32 = 15;

struct PhiTable {
    base: u32,
    limit: f32,
    values: Vec<f32>,
}

impl PhiTable {
    fn new() -> Self {
        let base = 2f32.powi(TABLE_LOW_EXP).to_bits();
        let top = 2f32.powi(TABLE_HIGH_EXP).to_bits();
        let cells = ((top - base) >> CELL_SHIFT) as usize;
        let values = (0..=cells)
            .map(|k| phi_exact(f32::from_bits(base + ((k as u32) << CELL_SHIFT)) as f64) as f32)
            .collect();
        Self {
            base,
            limit: 2f32.powi(TABLE_HIGH_EXP),
            values,
        }
    }

    #[inline]
    fn eval(&self, x: f32) -> f32 {
        if x >= self.limit {
            // below 2 e^-32, negligible against the LLR clamp
            return 0.0;
        }
        let bits = x.to_bits();
        if bits <= self.base {
            return self.values[0];
        }
        let offset = bits - self.base;
        let i = (offset >> CELL_SHIFT) as usize;
        let frac = (offset & ((1 << CELL_SHIFT) - 1)) as f32 * (1.0 / (1 << CELL_SHIFT) as f32);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

fn phi_table() -> &'static PhiTable {
    static TABLE: std::sync::OnceLock<PhiTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(PhiTable::new)
}

/// Edge layout of H reused across frames.
///
/// Messages live in variable-major edge order. Check nodes are represented
/// only by running aggregates (sum of `phi` magnitudes and sign parity), so
/// the per-iteration random accesses touch arrays of length `m` rather than
/// arrays of length `edges`.
#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    edge_check: Vec<u32>,
}

impl SumProductDecoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let mut col_start = Vec::with_capacity(h.n() + 1);
        let mut edge_check = Vec::with_capacity(h.num_edges());
        col_start.push(0);
        for col in h.columns() {
            edge_check.extend_from_slice(col);
            col_start.push(edge_check.len());
        }
        Self {
            n: h.n(),
            m: h.m(),
            col_start,
            edge_check,
        }
    }

    fn parity(&self, bits: &[u8]) -> Vec<u8> {
        let mut parity = vec![0u8; self.m];
        for v in 0..self.n {
            if bits[v] == 1 {
                for &c in &self.edge_check[self.col_start[v]..self.col_start[v + 1]] {
                    parity[c as usize] ^= 1;
                }
            }
        }
        parity
    }

    /// Finds the most likely `x` with `H x = syndrome` given that `x` is
    /// `received` passed through a binary symmetric channel of crossover `p`.
    pub fn decode(
        &self,
        received: &[u8],
        syndrome: &[u8],
        p: f64,
        max_iter: usize,
    ) -> DecodeOutcome {
        assert_eq!(received.len(), self.n);
        assert_eq!(syndrome.len(), self.m);
        let mut bits = received.to_vec();
        if self.parity(&bits) == syndrome {
            return DecodeOutcome {
                bits,
                converged: true,
                iterations: 0,
                corrections: 0,
            };
        }

        let table = phi_table();
        let clamp = LLR_CLAMP as f32;
        let mag = ((1.0 - p) / p).ln().min(LLR_CLAMP) as f32;
        let channel = |v: usize| if received[v] == 0 { mag } else { -mag };

        let edges = self.edge_check.len();
        let mut v2c = vec![0.0f32; edges];
        let mut v2c_phi = vec![0.0f32; edges];
        // aggregates of the messages currently held in v2c
        let mut sum = vec![0.0f32; self.m];
        let mut negative: Vec<bool> = syndrome.iter().map(|&s| s == 1).collect();
        for v in 0..self.n {
            let llr = channel(v);
            for e in self.col_start[v]..self.col_start[v + 1] {
                let c = self.edge_check[e] as usize;
                let f = table.eval(llr.abs());
                v2c[e] = llr;
                v2c_phi[e] = f;
                sum[c] += f;
                negative[c] ^= llr < 0.0;
            }
        }

        let mut next_sum = vec![0.0f32; self.m];
        let mut next_negative = negative.clone();
        let mut parity = vec![0u8; self.m];
        let mut c2v_local = Vec::with_capacity(16);
        let mut iterations = 0;
        let mut converged = false;

        while iterations < max_iter {
            iterations += 1;
            next_sum.iter_mut().for_each(|x| *x = 0.0);
            next_negative.copy_from_slice(
                syndrome
                    .iter()
                    .map(|&s| s == 1)
                    .collect::<Vec<_>>()
                    .as_slice(),
            );
            parity.iter_mut().for_each(|x| *x = 0);

            for v in 0..self.n {
                let range = self.col_start[v]..self.col_start[v + 1];
                let mut total = channel(v);
                c2v_local.clear();
                for e in range.clone() {
                    let c = self.edge_check[e] as usize;
                    let magnitude = table.eval((sum[c] - v2c_phi[e]).max(0.0));
                    let neg = negative[c] ^ (v2c[e] < 0.0);
                    let msg = if neg { -magnitude } else { magnitude };
                    c2v_local.push(msg);
                    total += msg;
                }
                let bit = (total < 0.0) as u8;
                bits[v] = bit;
                for (e, &msg) in range.zip(&c2v_local) {
                    let c = self.edge_check[e] as usize;
                    let out = (total - msg).clamp(-clamp, clamp);
                    let f = table.eval(out.abs());
                    v2c[e] = out;
                    v2c_phi[e] = f;
                    next_sum[c] += f;
                    next_negative[c] ^= out < 0.0;
                    parity[c] ^= bit;
                }
            }
            std::mem::swap(&mut sum, &mut next_sum);
            std::mem::swap(&mut negative, &mut next_negative);

            if parity == syndrome {
                converged = true;
                break;
            }
        }

        let corrections = bits.iter().zip(received).filter(|(a, b)| a != b).count();
        DecodeOutcome {
            bits,
            converged,
            iterations,
            corrections,
        }
    }
}
