use crate::metrics::CLASS_NAMES;
use crate::nn::{Activation, LayerDesc};

use super::ModelError;

/// One layer of a [`ModelSpec`]. Layers with a `title` appear as rows of the
/// printed summary; activations and dropout are folded into their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEntry {
    pub name: String,
    pub title: Option<String>,
    pub desc: LayerDesc,
}

impl LayerEntry {
    pub fn titled(name: impl Into<String>, title: impl Into<String>, desc: LayerDesc) -> Self {
        LayerEntry {
            name: name.into(),
            title: Some(title.into()),
            desc,
        }
    }

    pub fn hidden(name: impl Into<String>, desc: LayerDesc) -> Self {
        LayerEntry {
            name: name.into(),
            title: None,
            desc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Per-sample input shape `(H, W, C)`.
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerEntry>,
    pub class_labels: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub type_name: String,
    pub specification: String,
    pub output_size: String,
}

/// `582690` → `"582,690"`.
pub fn format_count(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl ModelSpec {
    /// The PCONet layer stack for 224×224 RGB input.
    pub fn pconet() -> Self {
        let mut layers = Vec::new();
        for (i, filters) in [32, 32, 64, 64, 128].into_iter().enumerate() {
            let n = i + 1;
            layers.push(LayerEntry::titled(
                format!("conv_{n}"),
                format!("Conv_{n}"),
                LayerDesc::Conv2d {
                    filters,
                    kernel: 3,
                    stride: 1,
                },
            ));
            layers.push(LayerEntry::hidden(
                format!("conv_{n}/relu"),
                LayerDesc::Activation(Activation::Relu),
            ));
            layers.push(LayerEntry::titled(
                format!("max_pool_{n}"),
                format!("Max_pool_{n}"),
                LayerDesc::MaxPool2d { pool: 2, stride: 2 },
            ));
        }
        layers.push(LayerEntry::titled("flatten", "Flattening Layer", LayerDesc::Flatten));
        for (i, units) in [128, 256].into_iter().enumerate() {
            let n = i + 1;
            layers.push(LayerEntry::titled(
                format!("dense_{n}"),
                format!("Dense Layer {n}"),
                LayerDesc::Dense { units },
            ));
            layers.push(LayerEntry::hidden(
                format!("dense_{n}/relu"),
                LayerDesc::Activation(Activation::Relu),
            ));
            layers.push(LayerEntry::hidden(
                format!("dense_{n}/dropout"),
                LayerDesc::Dropout { rate: 0.5 },
            ));
        }
        layers.push(LayerEntry::titled(
            "output",
            "Output Layer",
            LayerDesc::Dense { units: 2 },
        ));
        layers.push(LayerEntry::hidden(
            "output/sigmoid",
            LayerDesc::Activation(Activation::Sigmoid),
        ));
        ModelSpec::new(vec![224, 224, 3], layers)
    }

    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerEntry>) -> Self {
        ModelSpec {
            input_shape,
            layers,
            class_labels: CLASS_NAMES.map(String::from),
        }
    }

    /// Per-sample output shape after every layer.
    pub fn shape_trace(&self) -> Result<Vec<Vec<usize>>, ModelError> {
        let mut shape = self.input_shape.clone();
        let mut trace = Vec::with_capacity(self.layers.len());
        for (i, entry) in self.layers.iter().enumerate() {
            shape = entry
                .desc
                .output_shape(&shape)
                .map_err(|e| ModelError::InvalidSpec(format!("layer {i} ({}): {e}", entry.name)))?;
            trace.push(shape.clone());
        }
        Ok(trace)
    }

    /// Checks that shapes chain, names are unique and the head has 2 outputs.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_shape.len() != 3 || self.input_shape.contains(&0) {
            return Err(ModelError::InvalidSpec(format!(
                "input shape {:?} is not (H, W, C)",
                self.input_shape
            )));
        }
        let trace = self.shape_trace()?;
        if trace.last().map(Vec::as_slice) != Some(&[2][..]) {
            return Err(ModelError::InvalidSpec(format!(
                "model must end in exactly 2 outputs, got {:?}",
                trace.last()
            )));
        }
        let mut names: Vec<&str> = self.layers.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::InvalidSpec(format!("duplicate layer name {}", w[0])));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let mut shape = self.input_shape.clone();
        let mut total = 0;
        for entry in &self.layers {
            total += entry.desc.param_count(&shape);
            shape = entry.desc.output_shape(&shape).unwrap_or_default();
        }
        total
    }

    /// Rows of the Type / Specifications / Output Size table.
    pub fn summary_rows(&self) -> Result<Vec<SummaryRow>, ModelError> {
        let trace = self.shape_trace()?;
        let mut rows = Vec::new();
        for (i, entry) in self.layers.iter().enumerate() {
            let Some(title) = &entry.title else { continue };
            // an activation directly after a dense layer is shown with it
            let activation = match self.layers.get(i + 1).map(|l| l.desc) {
                Some(LayerDesc::Activation(a)) => Some(a),
                _ => None,
            };
            let specification = match entry.desc {
                LayerDesc::Conv2d {
                    filters,
                    kernel,
                    stride,
                } => format!("{filters}({kernel},{kernel}), s={stride}"),
                LayerDesc::MaxPool2d { pool, stride } => format!("({pool},{pool}), s={stride}"),
                LayerDesc::Dense { units } => match activation {
                    Some(a) => format!("{units}, {}", a.label()),
                    None => units.to_string(),
                },
                LayerDesc::Dropout { rate } => format!("rate={rate}"),
                LayerDesc::Activation(a) => a.label().to_string(),
                LayerDesc::Flatten => String::new(),
            };
            let shape = &trace[i];
            let output_size = if shape.len() == 1 {
                format!("(None,{})", shape[0])
            } else {
                format!("({})", shape.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            };
            rows.push(SummaryRow {
                type_name: title.clone(),
                specification,
                output_size,
            });
        }
        Ok(rows)
    }

    /// Plain-text summary table followed by parameter totals.
    pub fn summary_table(&self) -> Result<String, ModelError> {
        let mut out = String::from("Type | Specifications | Output Size\n");
        for row in self.summary_rows()? {
            out.push_str(&format!(
                "{} | {} | {}\n",
                row.type_name, row.specification, row.output_size
            ));
        }
        let total = format_count(self.param_count());
        out.push_str(&format!(
            "Trainable params: {total}\nNon-trainable params: 0\nTotal params: {total}\n"
        ));
        Ok(out)
    }
}
