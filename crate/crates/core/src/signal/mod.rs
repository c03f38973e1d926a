//! Periodised discrete wavelet transform, endpoint-aligned linear resampling,
//! and real-input FFT amplitude spectra.

mod fft;
mod interp;
mod wavelet;

pub use fft::{fft, ifft, rfft_amplitude, AmplitudeSpectrum};
pub use interp::interp_linear;
pub use wavelet::{
    dwt_level, idwt_level, make_basis, wavedec, waverec, WaveletBasis, WaveletPyramid,
    SUPPORTED_BASES,
};
