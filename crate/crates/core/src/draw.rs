//! Sources of numbers in [0, 1] consumed by the variation operators.
//!
//! Random and chaotic variants differ only in which source they hand to
//! the operators.

use rand::Rng;

pub trait DrawSource {
    /// Next value in `[0, 1]`.
    fn next_unit(&mut self) -> f64;
}

impl<T: DrawSource + ?Sized> DrawSource for &mut T {
    fn next_unit(&mut self) -> f64 {
        (**self).next_unit()
    }
}

impl<T: DrawSource + ?Sized> DrawSource for Box<T> {
    fn next_unit(&mut self) -> f64 {
        (**self).next_unit()
    }
}

/// Uniform `[0, 1)` draws from any RNG.
#[derive(Debug, Clone)]
pub struct UniformDraws<R>(pub R);

impl<R: Rng> DrawSource for UniformDraws<R> {
    fn next_unit(&mut self) -> f64 {
        self.0.gen::<f64>()
    }
}

/// Replays a fixed list of values. Panics when exhausted.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDraws {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedDraws {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self {
            values: values.into(),
            pos: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.values.len() - self.pos
    }
}

impl DrawSource for ScriptedDraws {
    fn next_unit(&mut self) -> f64 {
        let v = *self
            .values
            .get(self.pos)
            .unwrap_or_else(|| panic!("scripted draws exhausted after {}", self.pos));
        self.pos += 1;
        v
    }
}

/// Maps a draw in `[0, 1]` onto `0..n`, clamping a draw of 1 to `n - 1`.
pub fn index_from_draw(draw: f64, n: usize) -> usize {
    debug_assert!(n > 0);
    ((draw * n as f64).floor() as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_mapping() {
        assert_eq!(index_from_draw(0.6, 4), 2);
        assert_eq!(index_from_draw(0.0, 4), 0);
        assert_eq!(index_from_draw(1.0, 4), 3);
        assert_eq!(index_from_draw(0.999, 1), 0);
    }

    #[test]
    #[should_panic(expected = "exhausted")]
    fn scripted_exhaustion() {
        let mut s = ScriptedDraws::new(vec![0.1]);
        assert_eq!(s.next_unit(), 0.1);
        s.next_unit();
    }
}
