//! Exact real-algebraic machinery for spectral norms: characteristic
//! polynomials over the rationals, Sturm sequences, isolation of the largest
//! real root, and exact comparison of largest roots of two polynomials.

use num_traits::{One, Signed, Zero};

use crate::arith::{rat, rat_int, Rat};

/// Polynomial with rational coefficients, low degree first, no trailing
/// zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Rat::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * rat_int(i as i64 + 1))
                .collect(),
        )
    }

    fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lead = self.coeffs.last().unwrap().clone();
        Poly::new(self.coeffs.iter().map(|c| c / &lead).collect())
    }

    /// Scales by a positive constant so the leading coefficient has absolute
    /// value one; sign-safe for Sturm chains.
    fn normalize_positive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lead = self.coeffs.last().unwrap().abs();
        Poly::new(self.coeffs.iter().map(|c| c / &lead).collect())
    }

    /// Euclidean remainder, coefficients normalized monic to keep sizes sane.
    fn rem(&self, div: &Poly) -> Poly {
        assert!(!div.is_zero());
        let mut r = self.coeffs.clone();
        let d = div.degree();
        let lead = div.coeffs.last().unwrap();
        while r.len() > d {
            let k = r.len() - 1;
            let factor = r[k].clone() / lead;
            if !factor.is_zero() {
                for i in 0..=d {
                    let t = &div.coeffs[i] * &factor;
                    r[k - d + i] -= t;
                }
            }
            r.pop();
            while r.last().is_some_and(Rat::is_zero) {
                r.pop();
            }
            if r.len() <= d {
                break;
            }
        }
        Poly::new(r)
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let r = a.rem(&b).monic();
            a = b;
            b = r;
        }
        a
    }

    /// Squarefree part `p / gcd(p, p')`.
    pub fn squarefree(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            return self.monic();
        }
        self.div_exact(&g).monic()
    }

    fn div_exact(&self, div: &Poly) -> Poly {
        // long division, remainder known to vanish
        let mut r = self.coeffs.clone();
        let d = div.degree();
        let lead = div.coeffs.last().unwrap();
        let mut q = vec![Rat::zero(); self.coeffs.len().saturating_sub(d)];
        while r.len() > d {
            let k = r.len() - 1;
            let factor = r[k].clone() / lead;
            q[k - d] = factor.clone();
            for i in 0..=d {
                let t = &div.coeffs[i] * &factor;
                r[k - d + i] -= t;
            }
            r.pop();
            while r.last().is_some_and(Rat::is_zero) {
                r.pop();
            }
        }
        Poly::new(q)
    }
}

/// Dense rational matrix for spectral computations.
#[derive(Clone, Debug)]
pub struct RatMatrix {
    pub n: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zero(n: usize) -> Self {
        RatMatrix { n, data: vec![Rat::zero(); n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.n + j] = v;
    }

    fn mul(&self, other: &RatMatrix) -> RatMatrix {
        let n = self.n;
        let mut out = RatMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = a * other.get(k, j);
                    let cur = out.get(i, j) + t;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    fn trace(&self) -> Rat {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }
}

/// Characteristic polynomial `det(xI - M)` by the trace recursion
/// (Faddeev-LeVerrier), exact over the rationals.
pub fn charpoly(m: &RatMatrix) -> Poly {
    let n = m.n;
    if n == 0 {
        return Poly::new(vec![Rat::one()]);
    }
    let mut coeffs = vec![Rat::zero(); n + 1];
    coeffs[n] = Rat::one();
    let mut mk = m.clone(); // M * B_{k-1}
    for k in 1..=n {
        let c = -(mk.trace() / rat_int(k as i64));
        coeffs[n - k] = c.clone();
        if k < n {
            // B_k = M*B_{k-1} + c_k I ; then advance to M*B_k
            let mut bk = mk.clone();
            for i in 0..n {
                let cur = bk.get(i, i) + &c;
                bk.set(i, i, cur);
            }
            mk = m.mul(&bk);
        }
    }
    Poly::new(coeffs)
}

/// Sturm chain of the squarefree part.
pub struct Sturm {
    chain: Vec<Poly>,
}

impl Sturm {
    pub fn new(p: &Poly) -> Self {
        let p0 = p.squarefree();
        let mut chain = vec![p0.clone()];
        if p0.degree() >= 1 {
            chain.push(p0.derivative());
            loop {
                let k = chain.len();
                let r = chain[k - 2].rem(&chain[k - 1]);
                if r.is_zero() {
                    break;
                }
                let neg = Poly::new(r.coeffs().iter().map(|c| -c.clone()).collect())
                    .normalize_positive();
                chain.push(neg);
            }
        }
        Sturm { chain }
    }

    fn sign_changes(&self, x: &Rat) -> usize {
        let mut changes = 0;
        let mut prev: Option<bool> = None;
        for p in &self.chain {
            let v = p.eval(x);
            if v.is_zero() {
                continue;
            }
            let s = v.is_positive();
            if let Some(ps) = prev {
                if ps != s {
                    changes += 1;
                }
            }
            prev = Some(s);
        }
        changes
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count_roots(&self, a: &Rat, b: &Rat) -> usize {
        debug_assert!(a <= b);
        self.sign_changes(a).saturating_sub(self.sign_changes(b))
    }
}

/// Cauchy bound: every real root lies in `[-B, B]`.
pub fn root_bound(p: &Poly) -> Rat {
    if p.degree() == 0 || p.is_zero() {
        return Rat::one();
    }
    let lead = p.coeffs().last().unwrap();
    let max = p.coeffs()[..p.degree()]
        .iter()
        .map(|c| (c / lead).abs())
        .max()
        .unwrap_or_else(Rat::zero);
    max + Rat::one()
}

/// Isolating interval `(lo, hi]` for the largest real root, refined to width
/// at most `eps`; `None` when there is no real root.
pub fn largest_root_interval(p: &Poly, eps: &Rat) -> Option<(Rat, Rat)> {
    let sturm = Sturm::new(p);
    let bound = root_bound(p);
    let mut lo = -bound.clone();
    let mut hi = bound;
    if sturm.count_roots(&lo, &hi) == 0 {
        return None;
    }
    // keep the invariant: largest root lies in (lo, hi]
    while &hi - &lo > *eps {
        let mid = (&lo + &hi) / rat_int(2);
        if sturm.count_roots(&mid, &hi) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

/// Exact comparison of the largest real roots of two polynomials (both must
/// have real roots). Decides strict order by interval refinement and
/// certifies equality through a shared root of the gcd isolated on both
/// sides.
pub fn compare_largest_roots(p: &Poly, q: &Poly) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let sp = Sturm::new(p);
    let sq = Sturm::new(q);
    let bp = root_bound(p);
    let bq = root_bound(q);
    let mut ap = -bp.clone();
    let mut hp = bp;
    let mut aq = -bq.clone();
    let mut hq = bq;
    assert!(sp.count_roots(&ap, &hp) >= 1, "p has no real root");
    assert!(sq.count_roots(&aq, &hq) >= 1, "q has no real root");
    let refine = |s: &Sturm, lo: &mut Rat, hi: &mut Rat| {
        let mid = (&*lo + &*hi) / rat_int(2);
        if s.count_roots(&mid, hi) >= 1 {
            *lo = mid;
        } else {
            *hi = mid;
        }
    };
    let g = p.gcd(q);
    let sg = (g.degree() >= 1).then(|| Sturm::new(&g));
    loop {
        for _ in 0..4 {
            refine(&sp, &mut ap, &mut hp);
            refine(&sq, &mut aq, &mut hq);
        }
        if ap >= hq {
            return Ordering::Greater;
        }
        if aq >= hp {
            return Ordering::Less;
        }
        // overlapping: test equality via the gcd once both intervals isolate
        // a single root and the overlap carries a common root
        let olo = ap.clone().max(aq.clone());
        let ohi = hp.clone().min(hq.clone());
        if olo < ohi
            && sp.count_roots(&olo, &ohi) == 1
            && sq.count_roots(&olo, &ohi) == 1
            && sp.count_roots(&ohi, &hp.clone().max(ohi.clone())) == 0
            && sq.count_roots(&ohi, &hq.clone().max(ohi.clone())) == 0
        {
            if let Some(sg) = &sg {
                if sg.count_roots(&olo, &ohi) >= 1 {
                    return Ordering::Equal;
                }
            } else {
                // no common factor: roots must separate eventually
            }
        }
    }
}

/// Rational enclosure `[lo, hi]` of `sqrt(x)` for `x >= 0`, width below
/// `eps`.
pub fn sqrt_interval(x: &Rat, eps: &Rat) -> (Rat, Rat) {
    assert!(!x.is_negative());
    if x.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    let mut lo = Rat::zero();
    let mut hi = x.clone().max(Rat::one());
    while &hi - &lo > *eps {
        let mid = (&lo + &hi) / rat_int(2);
        if &mid * &mid <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

pub fn default_eps() -> Rat {
    rat(1, 1_000_000_000_000)
}
