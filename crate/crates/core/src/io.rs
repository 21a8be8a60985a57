//! Flat text serialization for networks (and, through `to_network`, single
//! quadratic neurons).
//!
//! The format is line-oriented: a versioned header, then per layer a
//! descriptor line followed by named parameter blocks. Each block is
//! `<name> <count>` and then `count` whitespace-separated numbers (matrix
//! blocks are written one row per line, row-major). Numbers use shortest
//! round-trip decimal formatting, so `load(save(net))` reproduces every
//! parameter bitwise.
//!
//! ```text
//! qnn-network v1
//! input_dim 2
//! layer_count 1
//! layer quadratic in 2 out 6 act sigmoid
//! b 6
//! ...
//! W 12
//! ...
//! Q0 4
//! ...
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::layers::{AffineLayer, Layer, LayerKind, QuadraticLayer, RpqLayer};
use crate::network::Network;
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Vector};

pub fn save_network<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    write_network(net, &mut out)
}

pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    network_from_str(&text)
}

pub fn write_network<T: Scalar>(net: &Network<T>, out: &mut impl Write) -> Result<()> {
    writeln!(out, "qnn-network v1")?;
    writeln!(out, "input_dim {}", net.input_dim())?;
    writeln!(out, "layer_count {}", net.layers().len())?;
    for layer in net.layers() {
        writeln!(
            out,
            "layer {} in {} out {} act {}",
            layer.kind(),
            layer.in_dim(),
            layer.out_dim(),
            layer.activation()
        )?;
        match layer {
            Layer::Affine(l) => {
                write_vector(out, "b", &l.b)?;
                write_matrix(out, "W", &l.w)?;
            }
            Layer::Quadratic(l) => {
                write_vector(out, "b", &l.b)?;
                write_matrix(out, "W", &l.w)?;
                for (k, q) in l.q.iter().enumerate() {
                    write_matrix(out, &format!("Q{k}"), q)?;
                }
            }
            Layer::Rpq(l) => {
                write_vector(out, "b", &l.b)?;
                write_matrix(out, "W", &l.w)?;
                write_vector(out, "c", &l.c)?;
                write_matrix(out, "U", &l.u)?;
            }
        }
    }
    Ok(())
}

pub fn network_to_string<T: Scalar>(net: &Network<T>) -> String {
    let mut buf = Vec::new();
    write_network(net, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("format writes valid utf-8")
}

fn write_vector<T: Scalar>(out: &mut impl Write, name: &str, v: &Vector<T>) -> Result<()> {
    writeln!(out, "{name} {}", v.len())?;
    let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    writeln!(out, "{}", line.join(" "))?;
    Ok(())
}

fn write_matrix<T: Scalar>(out: &mut impl Write, name: &str, m: &Matrix<T>) -> Result<()> {
    writeln!(out, "{name} {}", m.rows() * m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

struct TokenReader<'a> {
    tokens: std::str::SplitWhitespace<'a>,
    position: usize,
}

impl<'a> TokenReader<'a> {
    fn new(text: &'a str) -> Self {
        TokenReader { tokens: text.split_whitespace(), position: 0 }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.position += 1;
        self.tokens
            .next()
            .ok_or_else(|| Error::format(format!("unexpected end of file at token {}", self.position)))
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let tok = self.next()?;
        if tok != keyword {
            return Err(Error::format(format!(
                "expected '{keyword}' at token {}, found '{tok}'",
                self.position
            )));
        }
        Ok(())
    }

    fn usize(&mut self) -> Result<usize> {
        let tok = self.next()?;
        tok.parse()
            .map_err(|_| Error::format(format!("expected a count at token {}, found '{tok}'", self.position)))
    }

    fn scalar<T: Scalar>(&mut self) -> Result<T> {
        let tok = self.next()?;
        let v: T = tok
            .parse()
            .map_err(|_| Error::format(format!("expected a number at token {}, found '{tok}'", self.position)))?;
        if !v.is_finite() {
            return Err(Error::format(format!("non-finite value '{tok}' at token {}", self.position)));
        }
        Ok(v)
    }

    fn vector<T: Scalar>(&mut self, name: &str, len: usize) -> Result<Vector<T>> {
        self.expect(name)?;
        let count = self.usize()?;
        if count != len {
            return Err(Error::format(format!("block {name}: {count} values, expected {len}")));
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(self.scalar()?);
        }
        Ok(Vector::from_vec(data))
    }

    fn matrix<T: Scalar>(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix<T>> {
        self.expect(name)?;
        let count = self.usize()?;
        if count != rows * cols {
            return Err(Error::format(format!(
                "block {name}: {count} values, expected {rows}x{cols}"
            )));
        }
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.scalar()?;
            }
        }
        Ok(m)
    }
}

pub fn network_from_str<T: Scalar>(text: &str) -> Result<Network<T>> {
    let mut r = TokenReader::new(text);
    r.expect("qnn-network")?;
    let version = r.next()?;
    if version != "v1" {
        return Err(Error::format(format!("unsupported model format version '{version}'")));
    }
    r.expect("input_dim")?;
    let input_dim = r.usize()?;
    r.expect("layer_count")?;
    let layer_count = r.usize()?;
    if layer_count == 0 {
        return Err(Error::format("model has no layers".to_string()));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for idx in 0..layer_count {
        r.expect("layer")?;
        let kind: LayerKind = r.next()?.parse()?;
        r.expect("in")?;
        let n_in = r.usize()?;
        r.expect("out")?;
        let n_out = r.usize()?;
        r.expect("act")?;
        let act: ActivationKind = r.next()?.parse()?;
        if n_in == 0 || n_out == 0 {
            return Err(Error::format(format!("layer {idx}: zero dimension")));
        }
        let layer = match kind {
            LayerKind::Affine => {
                let b = r.vector("b", n_out)?;
                let w = r.matrix("W", n_out, n_in)?;
                Layer::Affine(AffineLayer { w, b, act })
            }
            LayerKind::Quadratic => {
                let b = r.vector("b", n_out)?;
                let w = r.matrix("W", n_out, n_in)?;
                let mut q = Vec::with_capacity(n_out);
                for k in 0..n_out {
                    let qk: Matrix<T> = r.matrix(&format!("Q{k}"), n_in, n_in)?;
                    // asymmetric files are rejected outright, tolerance zero
                    if !qk.is_symmetric() {
                        return Err(Error::format(format!(
                            "layer {idx}: Q{k} is not symmetric"
                        )));
                    }
                    q.push(qk);
                }
                Layer::Quadratic(QuadraticLayer { w, b, q, act })
            }
            LayerKind::Rpq => {
                let b = r.vector("b", n_out)?;
                let w = r.matrix("W", n_out, n_in)?;
                let c = r.vector("c", n_out)?;
                let u = r.matrix("U", n_out, n_in)?;
                Layer::Rpq(RpqLayer { w, b, u, c, act })
            }
        };
        layers.push(layer);
    }
    if r.tokens.next().is_some() {
        return Err(Error::format("trailing content after last layer".to_string()));
    }
    Network::new(input_dim, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::gaussian_params;
    use crate::layers::{init_layer, QInit};
    use crate::quadlogit::QuadLogitModel;
    use crate::tensor::Rng;
    use ActivationKind::{Sigmoid, Tanh};

    fn random_net(seed: u64) -> Network<f64> {
        let mut rng = Rng::new(seed);
        let layers = vec![
            init_layer(LayerKind::Affine, 3, 4, Tanh, &QInit::Zero, &mut rng).unwrap(),
            init_layer(LayerKind::Quadratic, 4, 3, Sigmoid, &QInit::SymmetricRandom(0.5), &mut rng)
                .unwrap(),
            init_layer(LayerKind::Rpq, 3, 2, Sigmoid, &QInit::Zero, &mut rng).unwrap(),
        ];
        let mut net = Network::new(3, layers).unwrap();
        gaussian_params(&mut net, &mut rng);
        net
    }

    #[test]
    fn round_trip_is_bitwise() {
        let net = random_net(5);
        let text = network_to_string(&net);
        let back: Network<f64> = network_from_str(&text).unwrap();
        assert_eq!(net.param_count(), back.param_count());
        for i in 0..net.param_count() {
            assert_eq!(net.get_param(i).to_bits(), back.get_param(i).to_bits(), "param {i}");
        }
        for (a, b) in net.layers().iter().zip(back.layers()) {
            assert_eq!(a.kind(), b.kind());
            assert_eq!(a.activation(), b.activation());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let net = random_net(9);
        save_network(&net, &path).unwrap();
        let back: Network<f64> = load_network(&path).unwrap();
        assert_eq!(network_to_string(&net), network_to_string(&back));
    }

    #[test]
    fn quadlogit_serializes_through_network_form() {
        let mut rng = Rng::new(3);
        let model = QuadLogitModel::<f64>::init(2, &QInit::SymmetricRandom(0.5), &mut rng).unwrap();
        let text = network_to_string(&model.to_network());
        let back: Network<f64> = network_from_str(&text).unwrap();
        let x = Vector::from_slice(&[0.3, -0.9]);
        let (y, _) = back.forward(&x).unwrap();
        assert_eq!(y[0].to_bits(), model.predict(&x).unwrap().to_bits());
    }

    #[test]
    fn asymmetric_q_is_rejected() {
        let net = random_net(7);
        let mut text = network_to_string(&net);
        // corrupt one off-diagonal entry of the first Q block
        let pos = text.find("Q0").unwrap();
        let tail = &text[pos..];
        let line_start = pos + tail.find('\n').unwrap() + 1;
        let line_end = line_start + text[line_start..].find('\n').unwrap();
        let row: Vec<&str> = text[line_start..line_end].split_whitespace().collect();
        let mut mangled = row.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        mangled[1] = "123.5".to_string();
        text.replace_range(line_start..line_end, &mangled.join(" "));
        let err = network_from_str::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("not symmetric"), "{err}");
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(network_from_str::<f64>("").is_err());
        assert!(network_from_str::<f64>("qnn-network v2").is_err());
        let net = random_net(1);
        let text = network_to_string(&net);
        let truncated = &text[..text.len() / 2];
        assert!(network_from_str::<f64>(truncated).is_err());
        let trailing = format!("{text} 1.0");
        assert!(network_from_str::<f64>(&trailing).is_err());
        let nan = text.replacen("0.", "NaN ", 1);
        assert!(network_from_str::<f64>(&nan).is_err());
    }
}
