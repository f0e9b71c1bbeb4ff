use crate::error::{Error, Result};
use crate::fock::{BasisLabel, DensityMatrix};

/// Diagonal elements `<n_a n_b|rho|n_a n_b>` for each label.
pub fn occupation_probabilities(rho: &DensityMatrix, labels: &[BasisLabel]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|l| Ok(rho.population(rho.space().index_of(&l.occupations())?)))
        .collect()
}

/// `(<a^+a>, <b^+b>)`, read off the diagonal.
pub fn photon_numbers(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let space = rho.space();
    if space.num_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: space.num_modes(),
        });
    }
    let k_b = space.dims()[1];
    let (mut n_a, mut n_b) = (0.0, 0.0);
    for i in 0..space.total_dim() {
        let p = rho.population(i);
        n_a += (i / k_b) as f64 * p;
        n_b += (i % k_b) as f64 * p;
    }
    Ok((n_a, n_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectation, mode_number, ModeSpace};

    #[test]
    fn vacuum_and_fock_states() {
        let space = ModeSpace::two_mode(3, 4).unwrap();
        let vac = DensityMatrix::vacuum(&space);
        let labels: Vec<BasisLabel> = (0..12)
            .map(|i| {
                let o = space.occupations_of(i);
                BasisLabel::new(o[0], o[1])
            })
            .collect();
        let p = occupation_probabilities(&vac, &labels).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
        assert_eq!(photon_numbers(&vac).unwrap(), (0.0, 0.0));

        let ket = DensityMatrix::basis_state(&space, &[1, 2]).unwrap();
        assert_eq!(photon_numbers(&ket).unwrap(), (1.0, 2.0));
        let full: f64 = occupation_probabilities(&ket, &labels).unwrap().iter().sum();
        assert!((full - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_photon_numbers_and_agreement_with_expectation() {
        let space = ModeSpace::two_mode(3, 3).unwrap();
        let rho = DensityMatrix::mixture(&space, &[(0.5, &[1, 0]), (0.5, &[0, 1])]).unwrap();
        assert_eq!(photon_numbers(&rho).unwrap(), (0.5, 0.5));
        let na = expectation(&mode_number(&space, 0).unwrap(), &rho).unwrap();
        assert!((na.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_labels_outside_truncation() {
        let space = ModeSpace::two_mode(2, 2).unwrap();
        let vac = DensityMatrix::vacuum(&space);
        assert!(occupation_probabilities(&vac, &[BasisLabel::new(2, 0)]).is_err());
    }
}
