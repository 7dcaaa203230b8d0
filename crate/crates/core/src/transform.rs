//! The approximate graph Fourier transform built from a rotation chain, and
//! its binary file format.
//!
//! The effective basis is `U_hat = S P D`: `S` is the rotation chain, `P`
//! reorders columns by ascending estimated eigenvalue and `D` holds optional
//! column signs set by [`Fgft::align_signs`].

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{FgftError, Result};
use crate::givens::{chain_nnz, Factors, GivensRotation, ParallelFactor, RotationChain};
use crate::graph::matrix_digest;
use crate::jacobi::{ApproxDiagonalization, Engine};
use crate::matrix::SymmetricMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildParams {
    pub engine: Engine,
    /// Rotation budget asked for; the chain may be shorter after an early stop.
    pub requested_j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fgft {
    diag: ApproxDiagonalization,
    signs: Option<Vec<f64>>,
    source_hash: [u8; 32],
    params: BuildParams,
}

impl Fgft {
    /// Runs `engine` on `l` with a budget of `j` rotations.
    pub fn build(l: &SymmetricMatrix, engine: Engine, j: usize) -> Self {
        let diag = engine.run(l, j);
        Self::from_parts(
            diag,
            matrix_digest(l),
            BuildParams {
                engine,
                requested_j: j,
            },
        )
    }

    pub fn from_parts(
        diag: ApproxDiagonalization,
        source_hash: [u8; 32],
        params: BuildParams,
    ) -> Self {
        Self {
            diag,
            signs: None,
            source_hash,
            params,
        }
    }

    pub fn n(&self) -> usize {
        self.diag.n()
    }

    pub fn diagonalization(&self) -> &ApproxDiagonalization {
        &self.diag
    }

    pub fn chain(&self) -> &RotationChain {
        &self.diag.chain
    }

    pub fn lambda_hat(&self) -> &[f64] {
        &self.diag.lambda_hat
    }

    pub fn perm(&self) -> &[usize] {
        &self.diag.perm
    }

    pub fn signs(&self) -> Option<&[f64]> {
        self.signs.as_deref()
    }

    pub fn source_hash(&self) -> &[u8; 32] {
        &self.source_hash
    }

    pub fn params(&self) -> BuildParams {
        self.params
    }

    pub fn rotation_count(&self) -> usize {
        self.diag.chain.rotation_count()
    }

    /// `n^2 / (4 J)`, against a dense `n x n` basis. `+inf` for an empty chain.
    pub fn rcg(&self) -> f64 {
        let nnz = chain_nnz(&self.diag.chain);
        if nnz == 0 {
            f64::INFINITY
        } else {
            let n = self.n() as f64;
            n * n / nnz as f64
        }
    }

    fn sign(&self, k: usize) -> f64 {
        self.signs.as_ref().map_or(1.0, |s| s[k])
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(FgftError::DimensionMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Approximate spectrum `U_hat^T x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = x.to_vec();
        self.diag.chain.apply_in_place(&mut y, true)?;
        Ok(self
            .diag
            .perm
            .iter()
            .enumerate()
            .map(|(k, &src)| self.sign(k) * y[src])
            .collect())
    }

    /// Synthesis `U_hat y`; exact inverse of [`Fgft::forward`].
    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        let mut x = vec![0.0; self.n()];
        for (k, &dst) in self.diag.perm.iter().enumerate() {
            x[dst] = self.sign(k) * y[k];
        }
        self.diag.chain.apply_in_place(&mut x, false)?;
        Ok(x)
    }

    /// Dense effective basis; column `k` pairs with `lambda_hat[k]`.
    pub fn to_dense(&self) -> Result<Array2<f64>> {
        let s = self.diag.chain.to_dense()?;
        let n = self.n();
        let mut u = Array2::zeros((n, n));
        for (k, &src) in self.diag.perm.iter().enumerate() {
            let sign = self.sign(k);
            for i in 0..n {
                u[[i, k]] = sign * s[[i, src]];
            }
        }
        Ok(u)
    }

    /// Flips columns so that `<u_hat_k, u_ref_k> >= 0` for every `k`.
    pub fn align_signs(&self, u_ref: ArrayView2<'_, f64>) -> Result<Self> {
        let n = self.n();
        if u_ref.dim() != (n, n) {
            return Err(FgftError::DimensionMismatch {
                expected: n,
                actual: if u_ref.nrows() != n {
                    u_ref.nrows()
                } else {
                    u_ref.ncols()
                },
            });
        }
        let mut unsigned = self.clone();
        unsigned.signs = None;
        let mut signs = vec![1.0; n];
        for (k, sign) in signs.iter_mut().enumerate() {
            let col = u_ref.column(k).to_vec();
            let proj = unsigned.forward(&col)?;
            if proj[k] < 0.0 {
                *sign = -1.0;
            }
        }
        unsigned.signs = Some(signs);
        Ok(unsigned)
    }
}

const MAGIC: &[u8; 8] = b"FGFTBIN\0";
pub const FORMAT_VERSION: u32 = 1;
const FLAG_SIGNS: u8 = 1;
const FLAG_EARLY_STOP: u8 = 2;

fn engine_code(e: Engine) -> u8 {
    match e {
        Engine::Sequential => 0,
        Engine::SequentialEfficient => 1,
        Engine::Parallel => 2,
    }
}

fn engine_from_code(c: u8) -> Result<Engine> {
    match c {
        0 => Ok(Engine::Sequential),
        1 => Ok(Engine::SequentialEfficient),
        2 => Ok(Engine::Parallel),
        other => Err(FgftError::CorruptFile(format!(
            "unknown engine code {other}"
        ))),
    }
}

/// Serializes an FGFT. Layout (all little-endian):
///
/// ```text
/// magic "FGFTBIN\0" | version u32 | layout u8 | index width u8 | engine u8 | flags u8
/// n u64 | rotations u64 | factors u64 | requested J u64 | residual f64 | source sha256 [32]
/// parallel only: rotations per factor, u32 x factors
/// rotations: p, q (u16 or u32 per index width), c f64, s f64
/// perm u32 x n | lambda_hat f64 x n | signs i8 x n (if flagged) | crc32 u32
/// ```
pub fn encode_fgft(f: &Fgft) -> Vec<u8> {
    let n = f.n();
    let chain = f.chain();
    let wide = n > usize::from(u16::MAX) + 1;
    let mut out = Vec::with_capacity(96 + 20 * chain.rotation_count() + 13 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(u8::from(chain.is_parallel()));
    out.push(if wide { 4 } else { 2 });
    out.push(engine_code(f.params.engine));
    let mut flags = 0;
    if f.signs.is_some() {
        flags |= FLAG_SIGNS;
    }
    if f.diag.early_stopped {
        flags |= FLAG_EARLY_STOP;
    }
    out.push(flags);
    for v in [
        n,
        chain.rotation_count(),
        chain.factor_count(),
        f.params.requested_j,
    ] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&f.diag.residual_offdiag_sq.to_le_bytes());
    out.extend_from_slice(&f.source_hash);
    if let Factors::Parallel(factors) = chain.factors() {
        for factor in factors {
            out.extend_from_slice(&(factor.len() as u32).to_le_bytes());
        }
    }
    for g in chain.rotations() {
        for idx in [g.p, g.q] {
            if wide {
                out.extend_from_slice(&(idx as u32).to_le_bytes());
            } else {
                out.extend_from_slice(&(idx as u16).to_le_bytes());
            }
        }
        out.extend_from_slice(&g.c.to_le_bytes());
        out.extend_from_slice(&g.s.to_le_bytes());
    }
    for &k in &f.diag.perm {
        out.extend_from_slice(&(k as u32).to_le_bytes());
    }
    for v in &f.diag.lambda_hat {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(signs) = &f.signs {
        out.extend(signs.iter().map(|&s| if s < 0.0 { 0xffu8 } else { 1u8 }));
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| FgftError::CorruptFile("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64_usize(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.array()?))
            .map_err(|_| FgftError::CorruptFile("count overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub fn decode_fgft(bytes: &[u8]) -> Result<Fgft> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(FgftError::CorruptFile("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("length checked"));
    if version != FORMAT_VERSION {
        return Err(FgftError::VersionMismatch(version));
    }
    let (body, trailer) = bytes
        .split_at_checked(bytes.len().saturating_sub(4))
        .filter(|(b, _)| b.len() >= 12)
        .ok_or_else(|| FgftError::CorruptFile("truncated file".into()))?;
    let stored = u32::from_le_bytes(trailer.try_into().expect("four bytes"));
    if crc32fast::hash(body) != stored {
        return Err(FgftError::CorruptFile("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 12 };
    let layout = r.u8()?;
    let width = r.u8()?;
    let engine = engine_from_code(r.u8()?)?;
    let flags = r.u8()?;
    let n = r.u64_usize()?;
    let rotation_count = r.u64_usize()?;
    let factor_count = r.u64_usize()?;
    let requested_j = r.u64_usize()?;
    let residual_offdiag_sq = r.f64()?;
    let source_hash = r.array::<32>()?;
    if width != 2 && width != 4 {
        return Err(FgftError::CorruptFile(format!("index width {width}")));
    }
    // Every rotation occupies at least 20 bytes, which bounds allocations.
    if rotation_count > body.len() / 20 || n > body.len() / 12 + 1 {
        return Err(FgftError::CorruptFile("counts exceed file size".into()));
    }

    let mut sizes = Vec::new();
    match layout {
        0 if factor_count == rotation_count => {}
        1 => {
            if factor_count > body.len() / 4 {
                return Err(FgftError::CorruptFile("counts exceed file size".into()));
            }
            for _ in 0..factor_count {
                sizes.push(r.u32()? as usize);
            }
            if sizes.iter().sum::<usize>() != rotation_count {
                return Err(FgftError::CorruptFile(
                    "factor sizes do not sum to rotation count".into(),
                ));
            }
        }
        _ => return Err(FgftError::CorruptFile(format!("bad layout {layout}"))),
    }

    let mut rotations = Vec::with_capacity(rotation_count);
    for _ in 0..rotation_count {
        let (p, q) = if width == 2 {
            (usize::from(r.u16()?), usize::from(r.u16()?))
        } else {
            (r.u32()? as usize, r.u32()? as usize)
        };
        let (c, s) = (r.f64()?, r.f64()?);
        let g =
            GivensRotation::new(p, q, c, s).map_err(|e| FgftError::CorruptFile(e.to_string()))?;
        rotations.push(g);
    }
    let corrupt = |e: FgftError| FgftError::CorruptFile(e.to_string());
    let chain = if layout == 0 {
        RotationChain::sequential(n, rotations).map_err(corrupt)?
    } else {
        let mut factors = Vec::with_capacity(sizes.len());
        let mut rest = rotations.into_iter();
        for size in sizes {
            let part: Vec<GivensRotation> = rest.by_ref().take(size).collect();
            factors.push(ParallelFactor::new(part, n).map_err(corrupt)?);
        }
        RotationChain::parallel(n, factors).map_err(corrupt)?
    };

    let mut perm = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for _ in 0..n {
        let k = r.u32()? as usize;
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(FgftError::CorruptFile("permutation is invalid".into()));
        }
        perm.push(k);
    }
    let mut lambda_hat = Vec::with_capacity(n);
    for _ in 0..n {
        lambda_hat.push(r.f64()?);
    }
    let signs = if flags & FLAG_SIGNS != 0 {
        let raw = r.take(n)?;
        Some(
            raw.iter()
                .map(|&b| if b == 0xff { -1.0 } else { 1.0 })
                .collect(),
        )
    } else {
        None
    };
    if r.pos != body.len() {
        return Err(FgftError::CorruptFile("trailing bytes".into()));
    }

    Ok(Fgft {
        diag: ApproxDiagonalization {
            chain,
            lambda_hat,
            perm,
            residual_offdiag_sq,
            early_stopped: flags & FLAG_EARLY_STOP != 0,
        },
        signs,
        source_hash,
        params: BuildParams {
            engine,
            requested_j,
        },
    })
}

pub fn save_fgft(f: &Fgft, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_fgft(f)).map_err(|e| FgftError::io(path, e))
}

pub fn load_fgft(path: impl AsRef<Path>) -> Result<Fgft> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FgftError::io(path, e))?;
    decode_fgft(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, sensor, sensor_default_threshold};
    use crate::jacobi::exact_eigh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path2() -> SymmetricMatrix {
        SymmetricMatrix::from_row_major(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn sensor_fgft(n: usize, j: usize, engine: Engine) -> (SymmetricMatrix, Fgft) {
        let l = laplacian(&sensor(n, sensor_default_threshold(n), 2).unwrap());
        let f = Fgft::build(&l, engine, j);
        (l, f)
    }

    #[test]
    fn path_forward_isolates_constant() {
        let f = Fgft::build(&path2(), Engine::Sequential, 1);
        let y = f.forward(&[1.0, 1.0]).unwrap();
        assert!((y[0].abs() - 2f64.sqrt()).abs() < 1e-14);
        assert!(y[1].abs() < 1e-14);
    }

    #[test]
    fn empty_chain_permutes() {
        let l = SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let f = Fgft::build(&l, Engine::Sequential, 0);
        assert_eq!(
            f.forward(&[10.0, 20.0, 30.0]).unwrap(),
            vec![20.0, 30.0, 10.0]
        );
        assert_eq!(
            f.inverse(&[20.0, 30.0, 10.0]).unwrap(),
            vec![10.0, 20.0, 30.0]
        );
        assert_eq!(f.rcg(), f64::INFINITY);
    }

    #[test]
    fn round_trip_and_isometry() {
        let (_, f) = sensor_fgft(256, 2000, Engine::Parallel);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = random_vec(256, &mut rng);
            let y = f.forward(&x).unwrap();
            assert!((norm(&y) - norm(&x)).abs() <= 1e-10 * norm(&x));
            let back = f.inverse(&y).unwrap();
            let err: Vec<f64> = back.iter().zip(&x).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&err) / norm(&x));
        }
        assert!(worst <= 1e-10);
    }

    #[test]
    fn inverse_of_one_hot_is_dense_column() {
        let (_, f) = sensor_fgft(24, 60, Engine::Sequential);
        let u = f.to_dense().unwrap();
        for k in [0, 7, 23] {
            let mut e = vec![0.0; 24];
            e[k] = 1.0;
            let col = f.inverse(&e).unwrap();
            for i in 0..24 {
                assert!((col[i] - u[[i, k]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rcg_values() {
        let (_, f) = sensor_fgft(64, 768, Engine::Sequential);
        assert_eq!(f.rotation_count(), 768);
        assert_eq!(format!("{:.2}", f.rcg()), "1.33");
    }

    #[test]
    fn dimension_errors() {
        let f = Fgft::build(&path2(), Engine::Sequential, 1);
        assert!(matches!(
            f.forward(&[1.0]),
            Err(FgftError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
        assert!(f.inverse(&[1.0, 2.0, 3.0]).is_err());
        assert!(f.align_signs(Array2::eye(3).view()).is_err());
    }

    fn err_c(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).iter().map(|x| x * x).sum::<f64>().sqrt()
            / b.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn align_signs_recovers_negated_basis() {
        let (_, f) = sensor_fgft(16, 1000, Engine::Sequential);
        let mut u = f.to_dense().unwrap();
        u.mapv_inplace(|v| -v);
        let aligned = f.align_signs(u.view()).unwrap();
        assert!(err_c(&aligned.to_dense().unwrap(), &u) < 1e-14);
        // Already aligned: unchanged.
        let again = aligned.align_signs(u.view()).unwrap();
        assert_eq!(again.to_dense().unwrap(), aligned.to_dense().unwrap());
    }

    #[test]
    fn alignment_is_per_column_optimal() {
        let (l, f) = sensor_fgft(12, 20, Engine::Sequential);
        let exact = exact_eigh(&l).unwrap();
        let before = f.to_dense().unwrap();
        let aligned = f
            .align_signs(exact.vectors.view())
            .unwrap()
            .to_dense()
            .unwrap();
        let best = err_c(&aligned, &exact.vectors);
        assert!(best <= err_c(&before, &exact.vectors) + 1e-15);
        // Brute force over all 2^12 sign patterns.
        for mask in 0u32..(1 << 12) {
            let mut cand = before.clone();
            for k in 0..12 {
                if mask & (1 << k) != 0 {
                    cand.column_mut(k).mapv_inplace(|v| -v);
                }
            }
            assert!(best <= err_c(&cand, &exact.vectors) + 1e-12);
        }
        for k in 0..12 {
            let a: f64 = before.column(k).dot(&exact.vectors.column(k));
            let b: f64 = aligned.column(k).dot(&exact.vectors.column(k));
            assert!((a.abs() - b.abs()).abs() < 1e-14 && b >= 0.0);
        }
    }

    #[test]
    fn file_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        for engine in [Engine::Sequential, Engine::Parallel] {
            let (l, f) = sensor_fgft(128, 1792, engine);
            let exact = exact_eigh(&l).unwrap();
            let f = f.align_signs(exact.vectors.view()).unwrap();
            let path = dir.path().join(format!("{engine}.fgft"));
            save_fgft(&f, &path).unwrap();
            let g = load_fgft(&path).unwrap();
            assert_eq!(f, g);
            assert_eq!(f.rcg().to_bits(), g.rcg().to_bits());
            let x: Vec<f64> = (0..128).map(|i| (i as f64 * 0.37).sin()).collect();
            let (a, b) = (f.forward(&x).unwrap(), g.forward(&x).unwrap());
            assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn file_size_is_twenty_bytes_per_rotation() {
        let n = 2;
        let rot = GivensRotation::new(0, 1, 1.0, 0.0).unwrap();
        let chain = RotationChain::sequential(n, vec![rot; 100_000]).unwrap();
        let diag = ApproxDiagonalization {
            chain,
            lambda_hat: vec![0.0, 1.0],
            perm: vec![0, 1],
            residual_offdiag_sq: 0.0,
            early_stopped: false,
        };
        let f = Fgft::from_parts(
            diag,
            [0; 32],
            BuildParams {
                engine: Engine::Sequential,
                requested_j: 100_000,
            },
        );
        let bytes = encode_fgft(&f).len();
        assert_eq!(bytes, 88 + 20 * 100_000 + 2 * 12 + 4);
    }

    #[test]
    fn rejects_damaged_files() {
        let f = Fgft::build(&path2(), Engine::Sequential, 1);
        let good = encode_fgft(&f);
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode_fgft(&bad_magic),
            Err(FgftError::CorruptFile(_))
        ));
        let mut bad_version = good.clone();
        bad_version[8] = 9;
        assert!(matches!(
            decode_fgft(&bad_version),
            Err(FgftError::VersionMismatch(9))
        ));
        let mut flipped = good.clone();
        flipped[40] ^= 1;
        assert!(matches!(
            decode_fgft(&flipped),
            Err(FgftError::CorruptFile(_))
        ));
        assert!(decode_fgft(&good[..good.len() - 1]).is_err());
        assert!(decode_fgft(&[]).is_err());
        assert!(decode_fgft(&good).is_ok());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_fgft("/nonexistent/x.fgft").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.fgft"));
    }
}
