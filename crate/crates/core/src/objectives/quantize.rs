use ndarray::{s, Array1, Array3, ArrayView1};

use crate::{Error, Result};

/// Hard nearest-neighbour product quantizer: `G` codebooks of `V` entries,
/// each entry covering `d / G` consecutive dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductQuantizer {
    /// G x V x (d / G)
    codebooks: Array3<f64>,
}

impl ProductQuantizer {
    pub fn new(codebooks: Array3<f64>) -> Result<Self> {
        let (g, v, sub) = codebooks.dim();
        if g == 0 || v == 0 || sub == 0 {
            return Err(Error::Shape(format!(
                "degenerate codebook shape {g}x{v}x{sub}"
            )));
        }
        Ok(ProductQuantizer { codebooks })
    }

    pub fn groups(&self) -> usize {
        self.codebooks.shape()[0]
    }

    pub fn entries(&self) -> usize {
        self.codebooks.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.groups() * self.codebooks.shape()[2]
    }

    pub fn codebooks(&self) -> &Array3<f64> {
        &self.codebooks
    }

    /// Replaces each sub-vector by its nearest entry (Euclidean; ties go to
    /// the lowest index). Returns the concatenation and the chosen indices.
    pub fn quantize(&self, z: ArrayView1<f64>) -> Result<(Array1<f64>, Vec<usize>)> {
        if z.len() != self.dim() {
            return Err(Error::Shape(format!(
                "vector has {} dims, quantizer expects {}",
                z.len(),
                self.dim()
            )));
        }
        let sub = self.codebooks.shape()[2];
        let mut out = Array1::zeros(self.dim());
        let mut indices = Vec::with_capacity(self.groups());
        for g in 0..self.groups() {
            let part = z.slice(s![g * sub..(g + 1) * sub]);
            let mut best = (0, f64::INFINITY);
            for v in 0..self.entries() {
                let entry = self.codebooks.slice(s![g, v, ..]);
                let dist: f64 = entry.iter().zip(part).map(|(a, b)| (a - b).powi(2)).sum();
                if dist < best.1 {
                    best = (v, dist);
                }
            }
            indices.push(best.0);
            out.slice_mut(s![g * sub..(g + 1) * sub])
                .assign(&self.codebooks.slice(s![g, best.0, ..]));
        }
        Ok((out, indices))
    }

    /// Squared Euclidean distance between `z` and its quantization.
    pub fn distortion(&self, z: ArrayView1<f64>) -> Result<f64> {
        let (q, _) = self.quantize(z)?;
        Ok(q.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    #[test]
    fn exact_entries_have_zero_distortion() {
        let books = Array::from_shape_fn((2, 3, 2), |(g, v, k)| (g * 10 + v * 3 + k) as f64);
        let pq = ProductQuantizer::new(books).unwrap();
        let z = array![3.0, 4.0, 16.0, 17.0];
        let (q, idx) = pq.quantize(z.view()).unwrap();
        assert_eq!(q, z);
        assert_eq!(idx, vec![1, 2]);
        assert_eq!(pq.distortion(z.view()).unwrap(), 0.0);
    }

    #[test]
    fn nearest_entry() {
        let pq = ProductQuantizer::new(array![[[0.0, 0.0], [1.0, 1.0]]]).unwrap();
        let (q, idx) = pq.quantize(array![0.9, 0.8].view()).unwrap();
        assert_eq!(idx, vec![1]);
        assert_eq!(q, array![1.0, 1.0]);
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let pq = ProductQuantizer::new(array![[[1.0], [-1.0], [0.0]]]).unwrap();
        let (_, idx) = pq.quantize(array![0.5].view()).unwrap();
        assert_eq!(idx, vec![0]);
        let pq = ProductQuantizer::new(array![[[-1.0], [1.0]]]).unwrap();
        assert_eq!(pq.quantize(array![0.0].view()).unwrap().1, vec![0]);
    }

    #[test]
    fn dimension_mismatch() {
        let pq = ProductQuantizer::new(Array3::zeros((2, 2, 2))).unwrap();
        assert!(pq.quantize(array![1.0, 2.0, 3.0].view()).is_err());
    }
}
