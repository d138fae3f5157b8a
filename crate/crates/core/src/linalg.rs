//! Thin wrappers over LAPACK symmetric/Hermitian eigensolvers.
//! Matrices are column-major; for Hermitian input that is the same as row-major conjugated,
//! so callers may pass either layout of a real symmetric matrix.

use crate::error::{Error, Result};
use crate::C64;

fn check(info: i32, routine: &str) -> Result<()> {
    if info != 0 {
        return Err(Error::Numerical(format!("{routine} returned info = {info}")));
    }
    Ok(())
}

/// Real symmetric eigensolver (divide and conquer). Overwrites `a` with eigenvectors when requested.
pub fn eigh_real(n: usize, a: &mut [f64], vectors: bool) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let jobz = if vectors { b'V' } else { b'N' } as libc_char;
    let uplo = b'L' as libc_char;
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = [0.0f64];
    let mut iwq = [0i32];
    let q = -1i32;
    unsafe {
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &q, iwq.as_mut_ptr(), &q, &mut info);
    }
    check(info, "dsyevd workspace query")?;
    let lwork = wq[0] as i32;
    let liwork = iwq[0].max(1);
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
    }
    check(info, "dsyevd")?;
    Ok(w)
}

/// Complex Hermitian eigensolver, column-major input.
pub fn eigh_complex(n: usize, a: &mut [C64], vectors: bool) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let jobz = if vectors { b'V' } else { b'N' } as libc_char;
    let uplo = b'L' as libc_char;
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = [C64::new(0.0, 0.0)];
    let mut rwq = [0.0f64];
    let mut iwq = [0i32];
    let q = -1i32;
    let ap = a.as_mut_ptr() as *mut lapack_sys::c_double_complex;
    unsafe {
        lapack_sys::zheevd_(&jobz, &uplo, &ni, ap, &ni, w.as_mut_ptr(), wq.as_mut_ptr() as *mut _, &q, rwq.as_mut_ptr(), &q, iwq.as_mut_ptr(), &q, &mut info);
    }
    check(info, "zheevd workspace query")?;
    let lwork = wq[0].re as i32;
    let lrwork = rwq[0] as i32;
    let liwork = iwq[0].max(1);
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::zheevd_(&jobz, &uplo, &ni, ap, &ni, w.as_mut_ptr(), work.as_mut_ptr() as *mut _, &lwork, rwork.as_mut_ptr(), &lrwork, iwork.as_mut_ptr(), &liwork, &mut info);
    }
    check(info, "zheevd")?;
    Ok(w)
}

/// Symmetric tridiagonal eigenproblem. Returns eigenvalues and, column-major, eigenvectors.
pub fn tridiag_eig(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(n.max(2) - 1, 0.0);
    let mut z = vec![0.0; n * n];
    let mut work = vec![0.0; (2 * n).max(1)];
    let jobz = b'V' as libc_char;
    let ni = n as i32;
    let mut info = 0;
    unsafe {
        lapack_sys::dstev_(&jobz, &ni, d.as_mut_ptr(), e.as_mut_ptr(), z.as_mut_ptr(), &ni, work.as_mut_ptr(), &mut info);
    }
    check(info, "dstev")?;
    Ok((d, z))
}

#[allow(non_camel_case_types)]
type libc_char = std::os::raw::c_char;
