//! Minimal level-5 MAT files: one real, non-sparse double matrix per file,
//! little-endian, uncompressed.

use std::path::Path;

use super::DatasetError;
use crate::jpeg::decode_unrounded;

/// Variable name used for exported tiles.
pub const MAT_NAME: &str = "im";

const MI_INT8: u32 = 1;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_DOUBLE: u32 = 9;
const MI_MATRIX: u32 = 14;
const MX_DOUBLE_CLASS: u32 = 6;
const HEADER_LEN: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct MatArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Column-major, `rows * cols` values.
    pub data: Vec<f64>,
}

impl MatArray {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }
}

fn name_field_len(name: &str) -> usize {
    if name.len() <= 4 {
        8
    } else {
        8 + name.len().div_ceil(8) * 8
    }
}

/// Exact size of the file [`write_mat_f64`] produces.
pub fn mat_file_len(rows: usize, cols: usize, name: &str) -> usize {
    HEADER_LEN + 8 + 16 + 16 + name_field_len(name) + 8 + rows * cols * 8
}

fn encode(array: &MatArray) -> Result<Vec<u8>, DatasetError> {
    let MatArray { name, rows, cols, data } = array;
    if data.len() != rows * cols {
        return Err(DatasetError::Argument(format!("{} values for a {rows}x{cols} matrix", data.len())));
    }
    if name.is_empty() || !name.is_ascii() {
        return Err(DatasetError::Argument(format!("invalid MAT variable name {name:?}")));
    }
    let payload = rows * cols * 8;
    let body = 16 + 16 + name_field_len(name) + 8 + payload;
    if body > u32::MAX as usize || *rows > i32::MAX as usize || *cols > i32::MAX as usize {
        return Err(DatasetError::Argument("matrix too large for a level-5 MAT file".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 + body);
    let mut text = b"MATLAB 5.0 MAT-file, written by devcorpus".to_vec();
    text.resize(116, b' ');
    out.extend_from_slice(&text);
    out.extend_from_slice(&[0u8; 8]);
    out.extend_from_slice(&0x0100u16.to_le_bytes());
    out.extend_from_slice(b"IM");

    let put = |words: &[u32], out: &mut Vec<u8>| words.iter().for_each(|w| out.extend_from_slice(&w.to_le_bytes()));
    put(&[MI_MATRIX, body as u32], &mut out);
    put(&[MI_UINT32, 8, MX_DOUBLE_CLASS, 0], &mut out);
    put(&[MI_INT32, 8, *rows as u32, *cols as u32], &mut out);
    if name.len() <= 4 {
        put(&[((name.len() as u32) << 16) | MI_INT8], &mut out);
        out.extend_from_slice(name.as_bytes());
        out.resize(out.len() + 4 - name.len(), 0);
    } else {
        put(&[MI_INT8, name.len() as u32], &mut out);
        out.extend_from_slice(name.as_bytes());
        out.resize(out.len() + name.len().div_ceil(8) * 8 - name.len(), 0);
    }
    put(&[MI_DOUBLE, payload as u32], &mut out);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_mat_f64(path: &Path, array: &MatArray) -> Result<(), DatasetError> {
    let bytes = encode(array)?;
    std::fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| DatasetError::Mat("unexpected end of file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// Reads a data element, returning its type and payload (padding skipped).
    fn element(&mut self) -> Result<(u32, &'a [u8]), DatasetError> {
        let first = self.u32()?;
        if first >> 16 != 0 {
            let (ty, n) = (first & 0xffff, (first >> 16) as usize);
            let data = self.take(4)?;
            if n > 4 {
                return Err(DatasetError::Mat("small element longer than 4 bytes".into()));
            }
            return Ok((ty, &data[..n]));
        }
        let n = self.u32()? as usize;
        let data = self.take(n)?;
        self.take(n.div_ceil(8) * 8 - n)?;
        Ok((first, data))
    }
}

/// Reads the first matrix of a file written by [`write_mat_f64`] (or any
/// uncompressed little-endian level-5 file holding a real double matrix).
pub fn read_mat_f64(path: &Path) -> Result<MatArray, DatasetError> {
    let buf = std::fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    if buf.len() < HEADER_LEN || &buf[126..128] != b"IM" {
        return Err(DatasetError::Mat("not a little-endian level-5 MAT file".into()));
    }
    let mut top = Cursor { buf: &buf, pos: HEADER_LEN };
    let (ty, body) = top.element()?;
    if ty != MI_MATRIX {
        return Err(DatasetError::Mat(format!("first element has type {ty}, expected a matrix")));
    }
    let mut c = Cursor { buf: body, pos: 0 };
    let (_, flags) = c.element()?;
    if flags.len() < 8 || flags[0] as u32 != MX_DOUBLE_CLASS || flags[1] & 0x08 != 0 {
        return Err(DatasetError::Mat("only real double matrices are supported".into()));
    }
    let (dty, dims) = c.element()?;
    if dty != MI_INT32 || dims.len() != 8 {
        return Err(DatasetError::Mat("only 2-D matrices are supported".into()));
    }
    let rows = i32::from_le_bytes(dims[0..4].try_into().unwrap());
    let cols = i32::from_le_bytes(dims[4..8].try_into().unwrap());
    let (rows, cols) = (rows.max(0) as usize, cols.max(0) as usize);
    let (_, name) = c.element()?;
    let name = String::from_utf8(name.to_vec()).map_err(|_| DatasetError::Mat("non-UTF-8 name".into()))?;
    let (rty, real) = c.element()?;
    if rty != MI_DOUBLE || real.len() != rows * cols * 8 {
        return Err(DatasetError::Mat("real part is not rows*cols doubles".into()));
    }
    let data = real.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(MatArray { name, rows, cols, data })
}

/// Writes the unrounded decompression of a grey JPEG as the double matrix
/// `im` (height x width).
pub fn export_decompressed(blob: &[u8], path: &Path) -> Result<(), DatasetError> {
    let img = decode_unrounded(blob)?;
    let (w, h) = (img.width, img.height);
    if img.data.len() != w * h {
        return Err(DatasetError::Argument("MAT export takes grey JPEGs only".into()));
    }
    let mut data = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            data[x * h + y] = img.data[y * w + x];
        }
    }
    write_mat_f64(
        path,
        &MatArray {
            name: MAT_NAME.to_string(),
            rows: h,
            cols: w,
            data,
        },
    )
}
