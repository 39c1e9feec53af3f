/// One gradient slot per named parameter, shape-matched to it.
///
/// With `accumulate` set, [`GradStore::record`] adds into the slot; otherwise
/// it overwrites. Slots are zeroed between optimizer steps with
/// [`GradStore::zero`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradStore {
    names: Vec<String>,
    slots: Vec<Vec<f64>>,
    pub accumulate: bool,
}

impl GradStore {
    pub fn new<S: Into<String>>(layout: impl IntoIterator<Item = (S, usize)>) -> Self {
        let (names, slots) = layout
            .into_iter()
            .map(|(n, len)| (n.into(), vec![0.0; len]))
            .unzip();
        Self {
            names,
            slots,
            accumulate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn slot(&self, i: usize) -> &[f64] {
        &self.slots[i]
    }

    pub fn slot_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.slots[i]
    }

    pub fn slots(&self) -> impl Iterator<Item = &[f64]> {
        self.slots.iter().map(Vec::as_slice)
    }

    pub fn record(&mut self, i: usize, grad: &[f64]) {
        let slot = &mut self.slots[i];
        assert_eq!(
            slot.len(),
            grad.len(),
            "gradient slot {} shape",
            self.names[i]
        );
        if self.accumulate {
            slot.iter_mut().zip(grad).for_each(|(s, g)| *s += g);
        } else {
            slot.copy_from_slice(grad);
        }
    }

    pub fn zero(&mut self) {
        self.slots.iter_mut().for_each(|s| s.fill(0.0));
    }

    pub fn is_zero(&self) -> bool {
        self.slots.iter().flatten().all(|&v| v == 0.0)
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.slots[i].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn global_norm(&self) -> f64 {
        self.slots
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.slots.iter().flatten().all(|v| v.is_finite())
    }
}
