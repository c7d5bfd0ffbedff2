/// Composite MOS predictions, each in `[1, 5]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Composite {
    pub csig: f64,
    pub cbak: f64,
    pub covl: f64,
}

/// The three linear regressions before clamping.
pub fn composite_raw(pesq: f64, llr: f64, wss: f64, ssnr: f64) -> Composite {
    Composite {
        csig: 3.093 - 1.029 * llr + 0.603 * pesq - 0.009 * wss,
        cbak: 1.634 + 0.478 * pesq - 0.007 * wss + 0.063 * ssnr,
        covl: 1.594 + 0.805 * pesq - 0.512 * llr - 0.007 * wss,
    }
}

/// Signal-distortion (CSIG), background-intrusiveness (CBAK) and overall
/// (COVL) predictors from PESQ, LLR, WSS and segmental SNR.
pub fn composite_measures(pesq: f64, llr: f64, wss: f64, ssnr: f64) -> Composite {
    let raw = composite_raw(pesq, llr, wss, ssnr);
    Composite { csig: raw.csig.clamp(1.0, 5.0), cbak: raw.cbak.clamp(1.0, 5.0), covl: raw.covl.clamp(1.0, 5.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_case() {
        let raw = composite_raw(4.5, 0.0, 0.0, 35.0);
        assert!((raw.csig - 5.8065).abs() < 1e-12);
        assert!((raw.cbak - 5.990).abs() < 1e-12);
        assert!((raw.covl - 5.2165).abs() < 1e-12);
        assert_eq!(composite_measures(4.5, 0.0, 0.0, 35.0), Composite { csig: 5.0, cbak: 5.0, covl: 5.0 });
    }

    #[test]
    fn floor_case() {
        assert!((composite_raw(1.0, 2.0, 100.0, 0.0).csig - 0.738).abs() < 1e-12);
        assert_eq!(composite_measures(1.0, 2.0, 100.0, 0.0).csig, 1.0);
    }

    #[test]
    fn intercepts() {
        let c = composite_measures(0.0, 0.0, 0.0, 0.0);
        assert_eq!((c.csig, c.cbak, c.covl), (3.093, 1.634, 1.594));
    }
}
