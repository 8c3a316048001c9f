//! Cross-checks against third-party readers: jpeg-decoder for JPEG streams,
//! matfile for MAT exports.

use devcorpus_core::dataset::{export_decompressed, toy_embed};
use devcorpus_core::jpeg::{decode_jpeg, decode_unrounded, encode_jpeg, DecodedImage, EncodeInput, QuantChoice};
use devcorpus_core::rawio::{GreyImage8, RgbImage8};

fn grey(w: usize, h: usize, phase: f64) -> GreyImage8 {
    GreyImage8::from_fn(w, h, |x, y| {
        let v = 128.0 + 70.0 * ((x as f64 * 0.11 + phase).sin() * (y as f64 * 0.07).cos()) + ((x * 31 + y * 17) % 19) as f64;
        v.clamp(0.0, 255.0) as u8
    })
}

fn third_party(blob: &[u8]) -> (jpeg_decoder::ImageInfo, Vec<u8>) {
    let mut d = jpeg_decoder::Decoder::new(blob);
    let pixels = d.decode().expect("jpeg-decoder accepts the stream");
    (d.info().unwrap(), pixels)
}

#[test]
fn grey_streams_decode_elsewhere() {
    for (w, h, q) in [(256, 256, 75u8), (100, 37, 90), (8, 8, 10), (257, 255, 100)] {
        let img = grey(w, h, q as f64);
        let blob = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(q)).unwrap();
        let (info, px) = third_party(&blob);
        assert_eq!((info.width as usize, info.height as usize), (w, h));
        assert_eq!(info.pixel_format, jpeg_decoder::PixelFormat::L8);
        let (DecodedImage::Grey(ours), _) = decode_jpeg(&blob).unwrap() else { panic!() };
        // different IDCT implementations: allow rounding-level disagreement only
        let worst = px.iter().zip(&ours.data).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
        assert!(worst <= 2, "{w}x{h} q{q}: max diff {worst}");
    }
}

#[test]
fn colour_streams_decode_elsewhere() {
    let img = RgbImage8::from_fn(64, 40, |x, y| [(x * 4) as u8, (y * 6) as u8, ((x + y) * 2) as u8]);
    let blob = encode_jpeg(EncodeInput::Rgb(&img), &QuantChoice::Quality(75)).unwrap();
    let (info, px) = third_party(&blob);
    assert_eq!((info.width, info.height), (64, 40));
    assert_eq!(info.pixel_format, jpeg_decoder::PixelFormat::RGB24);
    let (DecodedImage::Rgb(ours), _) = decode_jpeg(&blob).unwrap() else { panic!() };
    let worst = px.iter().zip(&ours.data).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
    assert!(worst <= 3, "max diff {worst}");
}

#[test]
fn stego_streams_decode_elsewhere() {
    let blob = encode_jpeg(EncodeInput::Grey(&grey(256, 256, 0.3)), &QuantChoice::Quality(75)).unwrap();
    let stego = toy_embed(&blob, 0.2, 42).unwrap();
    let (info, _) = third_party(&stego);
    assert_eq!((info.width, info.height), (256, 256));
}

fn read_mat(path: &std::path::Path) -> (Vec<usize>, Vec<f64>) {
    let mat = matfile::MatFile::parse(std::fs::File::open(path).unwrap()).expect("matfile parses the export");
    let arr = mat.find_by_name("im").expect("variable im");
    let matfile::NumericData::Double { real, imag } = arr.data() else {
        panic!("not a double array")
    };
    assert!(imag.is_none());
    (arr.size().clone(), real.clone())
}

#[test]
fn mat_export_reads_back_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let blob = encode_jpeg(EncodeInput::Grey(&grey(256, 256, 1.0)), &QuantChoice::Quality(75)).unwrap();
    let path = dir.path().join("tile.mat");
    export_decompressed(&blob, &path).unwrap();
    let (size, real) = read_mat(&path);
    assert_eq!(size, vec![256, 256]);
    assert_eq!(real.len() * 8, 524_288);
    let un = decode_unrounded(&blob).unwrap();
    for y in 0..256 {
        for x in 0..256 {
            assert_eq!(real[x * 256 + y].to_bits(), un.data[y * 256 + x].to_bits());
        }
    }
    let len = std::fs::metadata(&path).unwrap().len();
    assert!(len > 524_288 && len < 525_000);
}

#[test]
fn mat_export_of_flat_tile_and_non_square_layout() {
    let dir = tempfile::tempdir().unwrap();
    let flat = encode_jpeg(EncodeInput::Grey(&GreyImage8::from_fn(256, 256, |_, _| 128)), &QuantChoice::Quality(75)).unwrap();
    let p = dir.path().join("flat.mat");
    export_decompressed(&flat, &p).unwrap();
    assert!(read_mat(&p).1.iter().all(|&v| v == 128.0));

    // 24 rows x 40 columns: dimensions are (rows, cols) and storage column-major
    let img = grey(40, 24, 2.0);
    let blob = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(95)).unwrap();
    let p = dir.path().join("rect.mat");
    export_decompressed(&blob, &p).unwrap();
    let (size, real) = read_mat(&p);
    assert_eq!(size, vec![24, 40]);
    let un = decode_unrounded(&blob).unwrap();
    assert_eq!(real[3 * 24 + 5], un.data[5 * 40 + 3]);
}
