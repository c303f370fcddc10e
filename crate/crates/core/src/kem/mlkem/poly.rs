//! Arithmetic in `Z_q[X]/(X^256 + 1)` and its NTT domain, q = 3329.

pub const N: usize = 256;
pub const Q: u32 = 3329;
/// 128^-1 mod q, the scale applied at the end of the inverse NTT.
const N_INV: u32 = 3303;

const fn pow_mod(base: u32, mut exp: u32) -> u32 {
    let mut acc = 1u32;
    let mut b = base % Q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % Q;
        }
        b = b * b % Q;
        exp >>= 1;
    }
    acc
}

const fn bitrev7(x: u32) -> u32 {
    let mut r = 0;
    let mut i = 0;
    while i < 7 {
        r |= ((x >> i) & 1) << (6 - i);
        i += 1;
    }
    r
}

/// `17^BitRev7(i) mod q`.
const ZETAS: [u32; 128] = {
    let mut z = [0u32; 128];
    let mut i = 0;
    while i < 128 {
        z[i] = pow_mod(17, bitrev7(i as u32));
        i += 1;
    }
    z
};

/// `17^(2 BitRev7(i) + 1) mod q`, used by the base-case multiplication.
const GAMMAS: [u32; 128] = {
    let mut g = [0u32; 128];
    let mut i = 0;
    while i < 128 {
        g[i] = pow_mod(17, 2 * bitrev7(i as u32) + 1);
        i += 1;
    }
    g
};

/// Coefficients are kept fully reduced in `[0, q)`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Poly(pub [u16; N]);

impl Default for Poly {
    fn default() -> Self {
        Poly([0; N])
    }
}

impl std::fmt::Debug for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poly({:?}..)", &self.0[..4])
    }
}

#[inline]
fn add_mod(a: u32, b: u32) -> u32 {
    let s = a + b;
    if s >= Q {
        s - Q
    } else {
        s
    }
}

#[inline]
fn sub_mod(a: u32, b: u32) -> u32 {
    add_mod(a, Q - b)
}

impl Poly {
    pub fn add(&self, other: &Poly) -> Poly {
        let mut r = Poly::default();
        for i in 0..N {
            r.0[i] = add_mod(self.0[i] as u32, other.0[i] as u32) as u16;
        }
        r
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut r = Poly::default();
        for i in 0..N {
            r.0[i] = sub_mod(self.0[i] as u32, other.0[i] as u32) as u16;
        }
        r
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for i in 0..N {
            self.0[i] = add_mod(self.0[i] as u32, other.0[i] as u32) as u16;
        }
    }

    pub fn ntt(&self) -> Poly {
        let mut f = self.0.map(u32::from);
        let mut k = 1;
        let mut len = 128;
        while len >= 2 {
            let mut start = 0;
            while start < N {
                let zeta = ZETAS[k];
                k += 1;
                for j in start..start + len {
                    let t = zeta * f[j + len] % Q;
                    f[j + len] = sub_mod(f[j], t);
                    f[j] = add_mod(f[j], t);
                }
                start += 2 * len;
            }
            len /= 2;
        }
        Poly(f.map(|c| c as u16))
    }

    pub fn inv_ntt(&self) -> Poly {
        let mut f = self.0.map(u32::from);
        let mut k = 127;
        let mut len = 2;
        while len <= 128 {
            let mut start = 0;
            while start < N {
                let zeta = ZETAS[k];
                k -= 1;
                for j in start..start + len {
                    let t = f[j];
                    f[j] = add_mod(t, f[j + len]);
                    f[j + len] = zeta * sub_mod(f[j + len], t) % Q;
                }
                start += 2 * len;
            }
            len *= 2;
        }
        Poly(f.map(|c| (c * N_INV % Q) as u16))
    }

    /// Product of two NTT-domain polynomials.
    pub fn ntt_mul(&self, other: &Poly) -> Poly {
        let mut r = Poly::default();
        for i in 0..128 {
            let (a0, a1) = (self.0[2 * i] as u32, self.0[2 * i + 1] as u32);
            let (b0, b1) = (other.0[2 * i] as u32, other.0[2 * i + 1] as u32);
            let c0 = (a0 * b0 + (a1 * b1 % Q) * GAMMAS[i]) % Q;
            let c1 = (a0 * b1 + a1 * b0) % Q;
            r.0[2 * i] = c0 as u16;
            r.0[2 * i + 1] = c1 as u16;
        }
        r
    }

    /// Accumulates `a * b` (NTT domain) into `self`.
    pub fn mul_acc(&mut self, a: &Poly, b: &Poly) {
        let p = a.ntt_mul(b);
        self.add_assign(&p);
    }
}

/// `round(2^d / q * x) mod 2^d`.
#[inline]
pub fn compress(x: u16, d: u32) -> u16 {
    let x = x as u64;
    ((((x << (d + 1)) + Q as u64) / (2 * Q as u64)) & ((1 << d) - 1)) as u16
}

/// `round(q / 2^d * y)`.
#[inline]
pub fn decompress(y: u16, d: u32) -> u16 {
    ((y as u32 * Q + (1 << (d - 1))) >> d) as u16
}
