//! Decoding through the system libjpeg (islow IDCT, RGB/grey output).
//! Only meant as an independent reference in tests.

use std::ffi::{c_char, c_int, c_uchar, c_ulong, CStr};

extern "C" {
    fn oracle_version() -> c_int;
    fn oracle_free(p: *mut c_uchar);
    #[allow(clippy::too_many_arguments)]
    fn oracle_decode(
        data: *const c_uchar,
        len: c_ulong,
        out: *mut *mut c_uchar,
        width: *mut c_int,
        height: *mut c_int,
        channels: *mut c_int,
        warnings: *mut c_int,
        msg: *mut c_char,
        msg_len: c_int,
    ) -> c_int;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Interleaved samples, row-major.
    pub data: Vec<u8>,
    /// Warnings raised by libjpeg (corrupt data it recovered from).
    pub warnings: u32,
}

/// `JPEG_LIB_VERSION` of the linked headers (e.g. 80 for the v8 API).
pub fn lib_version() -> i32 {
    unsafe { oracle_version() }
}

pub fn decode(blob: &[u8]) -> Result<Decoded, String> {
    let mut out = std::ptr::null_mut();
    let (mut w, mut h, mut c, mut warn) = (0, 0, 0, 0);
    let mut msg = [0 as c_char; 256];
    let rc = unsafe {
        oracle_decode(
            blob.as_ptr(),
            blob.len() as c_ulong,
            &mut out,
            &mut w,
            &mut h,
            &mut c,
            &mut warn,
            msg.as_mut_ptr(),
            msg.len() as c_int,
        )
    };
    if rc != 0 {
        let text = unsafe { CStr::from_ptr(msg.as_ptr()) };
        return Err(text.to_string_lossy().into_owned());
    }
    let n = w as usize * h as usize * c as usize;
    let data = unsafe { std::slice::from_raw_parts(out, n).to_vec() };
    unsafe { oracle_free(out) };
    Ok(Decoded {
        width: w as usize,
        height: h as usize,
        channels: c as usize,
        data,
        warnings: warn as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 8x8 mid-grey baseline stream: one DC-only block, all-ones table,
    /// one-symbol Huffman tables.
    fn grey8() -> Vec<u8> {
        let mut v = vec![0xFF, 0xD8, 0xFF, 0xDB, 0x00, 0x43, 0x00];
        v.extend([1u8; 64]);
        v.extend([0xFF, 0xC0, 0x00, 0x0B, 0x08, 0x00, 0x08, 0x00, 0x08, 0x01, 0x01, 0x11, 0x00]);
        for class in [0x00, 0x10] {
            v.extend([0xFF, 0xC4, 0x00, 0x14, class, 1]);
            v.extend([0u8; 15]);
            v.push(0x00);
        }
        v.extend([0xFF, 0xDA, 0x00, 0x08, 0x01, 0x01, 0x00, 0x00, 0x3F, 0x00, 0b0011_1111, 0xFF, 0xD9]);
        v
    }

    #[test]
    fn decodes_minimal_stream() {
        let d = decode(&grey8()).unwrap();
        assert_eq!((d.width, d.height, d.channels), (8, 8, 1));
        assert!(d.data.iter().all(|&v| v == 128));
        assert_eq!(d.warnings, 0);
    }

    #[test]
    fn reports_garbage() {
        assert!(decode(b"not a jpeg").is_err());
    }
}
