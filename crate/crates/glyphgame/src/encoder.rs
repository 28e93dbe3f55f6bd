//! Symbol feature extractor: flattened canvas through two tanh
//! layers. Trained jointly with the receiver (gradients arrive via
//! the receiver's loss); a config flag can freeze it at its random
//! initialization instead.

use crate::error::{Error, Result};
use crate::nn::{init_uniform, BoundParams, NodeId, ParamId, ParamSet, Tape, Tensor};
use crate::render::Canvas;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct SymbolEncoder {
    pub input_pixels: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl SymbolEncoder {
    pub fn init(
        params: &mut ParamSet,
        canvas_size: usize,
        hidden_dim: usize,
        out_dim: usize,
        rng: &mut RngStream,
    ) -> Self {
        let input_pixels = canvas_size * canvas_size;
        let w1 = params.add(
            "encoder.w1",
            init_uniform(&[hidden_dim, input_pixels], input_pixels, rng),
        );
        let b1 = params.add("encoder.b1", init_uniform(&[hidden_dim], input_pixels, rng));
        let w2 = params.add(
            "encoder.w2",
            init_uniform(&[out_dim, hidden_dim], hidden_dim, rng),
        );
        let b2 = params.add("encoder.b2", init_uniform(&[out_dim], hidden_dim, rng));
        SymbolEncoder {
            input_pixels,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
        }
    }

    /// Ids of this encoder's parameters within the owning set.
    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }

    /// Record the encoding of `canvas` on the tape.
    pub fn encode(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        canvas: &Canvas,
    ) -> Result<NodeId> {
        if canvas.width() * canvas.height() != self.input_pixels {
            return Err(Error::Shape(format!(
                "encoder expects {} pixels, canvas has {}",
                self.input_pixels,
                canvas.width() * canvas.height()
            )));
        }
        let x = tape.leaf(Tensor::vector(canvas.pixels().to_vec()));
        self.encode_node(tape, bound, x)
    }

    /// Same as [`encode`], for a canvas already on the tape.
    pub fn encode_node(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        canvas_node: NodeId,
    ) -> Result<NodeId> {
        let h = tape.affine(bound.node(self.w1), canvas_node, bound.node(self.b1))?;
        let h = tape.tanh(h);
        let out = tape.affine(bound.node(self.w2), h, bound.node(self.b2))?;
        Ok(tape.tanh(out))
    }
}

/// Encode a symbol image to a plain feature vector (throwaway tape).
pub fn encode_symbol(
    encoder: &SymbolEncoder,
    params: &ParamSet,
    canvas: &Canvas,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = tape.bind(params);
    let out = encoder.encode(&mut tape, &bound, canvas)?;
    Ok(tape.value(out).data().to_vec())
}
