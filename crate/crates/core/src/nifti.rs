//! Single-file NIfTI-1 (`.nii`, `.nii.gz`) reading and writing.
//!
//! Only the 348-byte NIfTI-1 header is supported. Byte order is detected from
//! `sizeof_hdr`; gzip input is detected from its magic bytes rather than the
//! file extension. Written files are always little-endian with the voxel data
//! at offset 352 and an empty extension flag.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{Affine, BinaryMask3D, Field3D, Geometry, Volume3D};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;

const MAGIC_SINGLE: [u8; 4] = *b"n+1\0";
const MAGIC_PAIR: [u8; 4] = *b"ni1\0";
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
/// NIFTI_UNITS_MM
const UNITS_MM: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

/// Voxel storage type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Uint8,
    Int16,
    Int32,
    Float32,
    Float64,
}

impl DataType {
    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(DataType::Uint8),
            4 => Ok(DataType::Int16),
            8 => Ok(DataType::Int32),
            16 => Ok(DataType::Float32),
            64 => Ok(DataType::Float64),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }

    pub fn code(self) -> i16 {
        match self {
            DataType::Uint8 => 2,
            DataType::Int16 => 4,
            DataType::Int32 => 8,
            DataType::Float32 => 16,
            DataType::Float64 => 64,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            DataType::Uint8 => 1,
            DataType::Int16 => 2,
            DataType::Int32 | DataType::Float32 => 4,
            DataType::Float64 => 8,
        }
    }

    fn name(self) -> &'static str {
        match self {
            DataType::Uint8 => "uint8",
            DataType::Int16 => "int16",
            DataType::Int32 => "int32",
            DataType::Float32 => "float32",
            DataType::Float64 => "float64",
        }
    }
}

/// The fields of a NIfTI-1 header this crate reads or writes. Unlisted fields
/// are written as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub sizeof_hdr: i32,
    pub dim_info: u8,
    pub dim: [i16; 8],
    pub intent_code: i16,
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub xyzt_units: u8,
    pub cal_max: f32,
    pub cal_min: f32,
    pub descrip: [u8; 80],
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern_b: f32,
    pub quatern_c: f32,
    pub quatern_d: f32,
    pub qoffset_x: f32,
    pub qoffset_y: f32,
    pub qoffset_z: f32,
    pub srow_x: [f32; 4],
    pub srow_y: [f32; 4],
    pub srow_z: [f32; 4],
    pub magic: [u8; 4],
}

impl Default for NiftiHeader {
    fn default() -> Self {
        Self {
            sizeof_hdr: HEADER_SIZE as i32,
            dim_info: 0,
            dim: [3, 1, 1, 1, 1, 1, 1, 1],
            intent_code: 0,
            datatype: DataType::Float32.code(),
            bitpix: 32,
            pixdim: [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vox_offset: DEFAULT_VOX_OFFSET as f32,
            scl_slope: 1.0,
            scl_inter: 0.0,
            xyzt_units: UNITS_MM,
            cal_max: 0.0,
            cal_min: 0.0,
            descrip: [0; 80],
            qform_code: 0,
            sform_code: 0,
            quatern_b: 0.0,
            quatern_c: 0.0,
            quatern_d: 0.0,
            qoffset_x: 0.0,
            qoffset_y: 0.0,
            qoffset_z: 0.0,
            srow_x: [1.0, 0.0, 0.0, 0.0],
            srow_y: [0.0, 1.0, 0.0, 0.0],
            srow_z: [0.0, 0.0, 1.0, 0.0],
            magic: MAGIC_SINGLE,
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    order: ByteOrder,
}

impl Cursor<'_> {
    fn bytes<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[off..off + N]);
        if self.order == ByteOrder::Big {
            b.reverse();
        }
        b
    }
    fn i16(&self, off: usize) -> i16 {
        i16::from_le_bytes(self.bytes(off))
    }
    fn i32(&self, off: usize) -> i32 {
        i32::from_le_bytes(self.bytes(off))
    }
    fn f32(&self, off: usize) -> f32 {
        f32::from_le_bytes(self.bytes(off))
    }
    fn f32s<const N: usize>(&self, off: usize) -> [f32; N] {
        std::array::from_fn(|i| self.f32(off + 4 * i))
    }
}

struct Sink {
    buf: Vec<u8>,
    order: ByteOrder,
}

impl Sink {
    fn put(&mut self, off: usize, mut b: Vec<u8>) {
        if self.order == ByteOrder::Big {
            b.reverse();
        }
        self.buf[off..off + b.len()].copy_from_slice(&b);
    }
    fn i16(&mut self, off: usize, v: i16) {
        self.put(off, v.to_le_bytes().to_vec());
    }
    fn i32(&mut self, off: usize, v: i32) {
        self.put(off, v.to_le_bytes().to_vec());
    }
    fn f32(&mut self, off: usize, v: f32) {
        self.put(off, v.to_le_bytes().to_vec());
    }
    fn f32s(&mut self, off: usize, v: &[f32]) {
        for (i, &x) in v.iter().enumerate() {
            self.f32(off + 4 * i, x);
        }
    }
}

impl NiftiHeader {
    /// Parses the first 348 bytes of `buf`, detecting byte order.
    pub fn parse(buf: &[u8]) -> Result<(Self, ByteOrder)> {
        if buf.len() < HEADER_SIZE {
            return Err(Error::MalformedHeader(format!(
                "need {HEADER_SIZE} header bytes, found {}",
                buf.len()
            )));
        }
        let raw = [buf[0], buf[1], buf[2], buf[3]];
        let order = if i32::from_le_bytes(raw) == HEADER_SIZE as i32 {
            ByteOrder::Little
        } else if i32::from_be_bytes(raw) == HEADER_SIZE as i32 {
            ByteOrder::Big
        } else {
            return Err(Error::MalformedHeader(format!(
                "sizeof_hdr is {} (little-endian) / {} (big-endian), expected 348",
                i32::from_le_bytes(raw),
                i32::from_be_bytes(raw)
            )));
        };
        let c = Cursor { buf, order };
        let mut descrip = [0u8; 80];
        descrip.copy_from_slice(&buf[148..228]);
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&buf[344..348]);
        let hdr = NiftiHeader {
            sizeof_hdr: c.i32(0),
            dim_info: buf[39],
            dim: std::array::from_fn(|i| c.i16(40 + 2 * i)),
            intent_code: c.i16(68),
            datatype: c.i16(70),
            bitpix: c.i16(72),
            pixdim: c.f32s(76),
            vox_offset: c.f32(108),
            scl_slope: c.f32(112),
            scl_inter: c.f32(116),
            xyzt_units: buf[123],
            cal_max: c.f32(124),
            cal_min: c.f32(128),
            descrip,
            qform_code: c.i16(252),
            sform_code: c.i16(254),
            quatern_b: c.f32(256),
            quatern_c: c.f32(260),
            quatern_d: c.f32(264),
            qoffset_x: c.f32(268),
            qoffset_y: c.f32(272),
            qoffset_z: c.f32(276),
            srow_x: c.f32s(280),
            srow_y: c.f32s(296),
            srow_z: c.f32s(312),
            magic,
        };
        Ok((hdr, order))
    }

    /// Encodes the header as 348 bytes in the given byte order.
    pub fn encode(&self, order: ByteOrder) -> Vec<u8> {
        let mut s = Sink {
            buf: vec![0u8; HEADER_SIZE],
            order,
        };
        s.i32(0, self.sizeof_hdr);
        s.buf[38] = b'r';
        s.buf[39] = self.dim_info;
        for (i, &d) in self.dim.iter().enumerate() {
            s.i16(40 + 2 * i, d);
        }
        s.i16(68, self.intent_code);
        s.i16(70, self.datatype);
        s.i16(72, self.bitpix);
        s.f32s(76, &self.pixdim);
        s.f32(108, self.vox_offset);
        s.f32(112, self.scl_slope);
        s.f32(116, self.scl_inter);
        s.buf[123] = self.xyzt_units;
        s.f32(124, self.cal_max);
        s.f32(128, self.cal_min);
        s.buf[148..228].copy_from_slice(&self.descrip);
        s.i16(252, self.qform_code);
        s.i16(254, self.sform_code);
        s.f32(256, self.quatern_b);
        s.f32(260, self.quatern_c);
        s.f32(264, self.quatern_d);
        s.f32(268, self.qoffset_x);
        s.f32(272, self.qoffset_y);
        s.f32(276, self.qoffset_z);
        s.f32s(280, &self.srow_x);
        s.f32s(296, &self.srow_y);
        s.f32s(312, &self.srow_z);
        s.buf[344..348].copy_from_slice(&self.magic);
        s.buf
    }

    /// Checks the invariants this crate relies on and returns the spatial
    /// dims, spacing and datatype.
    fn validate(&self) -> Result<([usize; 3], [f64; 3], DataType)> {
        if self.magic == MAGIC_PAIR {
            return Err(Error::MalformedHeader(
                "header-only (.hdr/.img pair) files are not supported".into(),
            ));
        }
        if self.magic != MAGIC_SINGLE {
            return Err(Error::MalformedHeader(format!(
                "bad magic {:?}",
                self.magic
            )));
        }
        let ndim = self.dim[0];
        if !(1..=7).contains(&ndim) {
            return Err(Error::MalformedHeader(format!(
                "dim[0] = {ndim} not in 1..=7"
            )));
        }
        if ndim < 3 {
            return Err(Error::UnsupportedDimensions(format!(
                "dim[0] = {ndim}, need a 3D volume"
            )));
        }
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let d = self.dim[a + 1];
            if d < 1 {
                return Err(Error::MalformedHeader(format!("dim[{}] = {d}", a + 1)));
            }
            dims[a] = d as usize;
        }
        for i in 4..=ndim as usize {
            if self.dim[i] > 1 {
                return Err(Error::UnsupportedDimensions(format!(
                    "dim[{i}] = {} (only 3D volumes are supported)",
                    self.dim[i]
                )));
            }
        }
        let mut spacing = [0.0; 3];
        for a in 0..3 {
            let p = self.pixdim[a + 1];
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::MalformedHeader(format!("pixdim[{}] = {p}", a + 1)));
            }
            spacing[a] = p as f64;
        }
        let dtype = DataType::from_code(self.datatype)?;
        if self.bitpix as usize != 8 * dtype.bytes() {
            return Err(Error::MalformedHeader(format!(
                "bitpix {} does not match datatype {}",
                self.bitpix,
                dtype.name()
            )));
        }
        if !(self.vox_offset.is_finite() && self.vox_offset >= HEADER_SIZE as f32) {
            return Err(Error::MalformedHeader(format!(
                "vox_offset {} before end of header",
                self.vox_offset
            )));
        }
        Ok((dims, spacing, dtype))
    }

    /// Voxel-to-world affine: sform if present, else qform, else pixdim scaling.
    pub fn affine(&self) -> Affine {
        if self.sform_code > 0 {
            let r = |row: &[f32; 4]| row.map(|v| v as f64);
            [
                r(&self.srow_x),
                r(&self.srow_y),
                r(&self.srow_z),
                [0.0, 0.0, 0.0, 1.0],
            ]
        } else if self.qform_code > 0 {
            self.qform_affine()
        } else {
            let p = |i: usize| self.pixdim[i] as f64;
            [
                [p(1), 0.0, 0.0, 0.0],
                [0.0, p(2), 0.0, 0.0],
                [0.0, 0.0, p(3), 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        }
    }

    fn qform_affine(&self) -> Affine {
        let (b, c, d) = (
            self.quatern_b as f64,
            self.quatern_c as f64,
            self.quatern_d as f64,
        );
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
        let (dx, dy, dz) = (
            self.pixdim[1] as f64,
            self.pixdim[2] as f64,
            qfac * self.pixdim[3] as f64,
        );
        let r = [
            [
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
            ],
            [
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
            ],
            [
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - b * b - c * c,
            ],
        ];
        let off = [
            self.qoffset_x as f64,
            self.qoffset_y as f64,
            self.qoffset_z as f64,
        ];
        let mut m = [[0.0; 4]; 4];
        for i in 0..3 {
            m[i] = [r[i][0] * dx, r[i][1] * dy, r[i][2] * dz, off[i]];
        }
        m[3] = [0.0, 0.0, 0.0, 1.0];
        m
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[..2] == GZIP_MAGIC
}

/// Decodes an in-memory NIfTI-1 file (plain or gzip) into its header and volume.
pub fn decode_nifti(bytes: &[u8]) -> Result<(NiftiHeader, Volume3D)> {
    if is_gzip(bytes) {
        let mut plain = Vec::new();
        MultiGzDecoder::new(bytes)
            .read_to_end(&mut plain)
            .map_err(|e| Error::MalformedHeader(format!("gzip stream: {e}")))?;
        return decode_plain(&plain);
    }
    decode_plain(bytes)
}

fn decode_plain(bytes: &[u8]) -> Result<(NiftiHeader, Volume3D)> {
    let (hdr, order) = NiftiHeader::parse(bytes)?;
    let (dims, spacing, dtype) = hdr.validate()?;
    let n = dims[0] * dims[1] * dims[2];
    let offset = hdr.vox_offset as usize;
    let expected = n * dtype.bytes();
    let available = bytes.len().saturating_sub(offset);
    if available < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: available,
        });
    }
    let payload = &bytes[offset..offset + expected];
    let mut data = decode_voxels(payload, dtype, order);
    let slope = hdr.scl_slope as f64;
    if slope != 0.0 && slope.is_finite() {
        let inter = hdr.scl_inter as f64;
        let inter = if inter.is_finite() { inter } else { 0.0 };
        if slope != 1.0 || inter != 0.0 {
            for v in data.iter_mut() {
                *v = slope * *v + inter;
            }
        }
    }
    let geom = Geometry::with_affine(dims, spacing, hdr.affine())?;
    let vol = Field3D::new(geom, data)?;
    Ok((hdr, vol))
}

fn decode_voxels(payload: &[u8], dtype: DataType, order: ByteOrder) -> Vec<f64> {
    macro_rules! decode {
        ($t:ty, $n:expr) => {
            payload
                .chunks_exact($n)
                .map(|c| {
                    let mut b = [0u8; $n];
                    b.copy_from_slice(c);
                    match order {
                        ByteOrder::Little => <$t>::from_le_bytes(b) as f64,
                        ByteOrder::Big => <$t>::from_be_bytes(b) as f64,
                    }
                })
                .collect()
        };
    }
    match dtype {
        DataType::Uint8 => payload.iter().map(|&b| b as f64).collect(),
        DataType::Int16 => decode!(i16, 2),
        DataType::Int32 => decode!(i32, 4),
        DataType::Float32 => decode!(f32, 4),
        DataType::Float64 => decode!(f64, 8),
    }
}

/// Reads a NIfTI-1 file, gzip-compressed or not.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D> {
    read_nifti_with_header(path).map(|(_, v)| v)
}

pub fn read_nifti_with_header(path: impl AsRef<Path>) -> Result<(NiftiHeader, Volume3D)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_nifti(&bytes)
}

/// Reads a mask file; any nonzero voxel is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask3D> {
    Ok(read_nifti(path)?.map(|&v| v != 0.0))
}

/// Options for [`encode_nifti`].
#[derive(Debug, Clone, Copy)]
pub struct WriteOptions {
    pub dtype: DataType,
    pub byte_order: ByteOrder,
    pub gzip: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            dtype: DataType::Float32,
            byte_order: ByteOrder::Little,
            gzip: false,
        }
    }
}

/// Header describing `vol` stored as `dtype`, with the sform taken from the affine.
pub fn header_for(vol: &Volume3D, dtype: DataType) -> NiftiHeader {
    let g = vol.geometry();
    let f = |v: f64| v as f32;
    let row = |r: usize| {
        [
            f(g.affine[r][0]),
            f(g.affine[r][1]),
            f(g.affine[r][2]),
            f(g.affine[r][3]),
        ]
    };
    NiftiHeader {
        dim: [
            3,
            g.dims[0] as i16,
            g.dims[1] as i16,
            g.dims[2] as i16,
            1,
            1,
            1,
            1,
        ],
        datatype: dtype.code(),
        bitpix: (8 * dtype.bytes()) as i16,
        pixdim: [
            1.0,
            f(g.spacing[0]),
            f(g.spacing[1]),
            f(g.spacing[2]),
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        sform_code: 1,
        srow_x: row(0),
        srow_y: row(1),
        srow_z: row(2),
        ..NiftiHeader::default()
    }
}

fn encode_voxels(vol: &Volume3D, dtype: DataType, order: ByteOrder) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(vol.len() * dtype.bytes());
    let put = |out: &mut Vec<u8>, le: &[u8]| match order {
        ByteOrder::Little => out.extend_from_slice(le),
        ByteOrder::Big => out.extend(le.iter().rev()),
    };
    for (index, &v) in vol.data().iter().enumerate() {
        let unrepresentable = || Error::Unrepresentable {
            value: v,
            index,
            dtype: dtype.name(),
        };
        match dtype {
            DataType::Uint8 => {
                if !(v.fract() == 0.0 && (0.0..=255.0).contains(&v)) {
                    return Err(unrepresentable());
                }
                out.push(v as u8);
            }
            DataType::Int16 => {
                if !(v.fract() == 0.0 && (i16::MIN as f64..=i16::MAX as f64).contains(&v)) {
                    return Err(unrepresentable());
                }
                put(&mut out, &(v as i16).to_le_bytes());
            }
            DataType::Int32 => {
                if !(v.fract() == 0.0 && (i32::MIN as f64..=i32::MAX as f64).contains(&v)) {
                    return Err(unrepresentable());
                }
                put(&mut out, &(v as i32).to_le_bytes());
            }
            DataType::Float32 => put(&mut out, &(v as f32).to_le_bytes()),
            DataType::Float64 => put(&mut out, &v.to_le_bytes()),
        }
    }
    Ok(out)
}

/// Encodes a volume as a complete single-file NIfTI-1 byte stream.
///
/// Integer datatypes require integral voxel values within range; there is no
/// implicit rescaling.
pub fn encode_nifti(vol: &Volume3D, opts: WriteOptions) -> Result<Vec<u8>> {
    if vol.dims().iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::UnsupportedDimensions(format!(
            "dims {:?} exceed the NIfTI-1 limit of {}",
            vol.dims(),
            i16::MAX
        )));
    }
    let hdr = header_for(vol, opts.dtype);
    let mut bytes = hdr.encode(opts.byte_order);
    bytes.extend_from_slice(&[0u8; DEFAULT_VOX_OFFSET - HEADER_SIZE]);
    bytes.extend(encode_voxels(vol, opts.dtype, opts.byte_order)?);
    if opts.gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::fast());
        enc.write_all(&bytes)
            .and_then(|_| enc.finish())
            .map_err(|e| Error::io("<gzip buffer>", e))
    } else {
        Ok(bytes)
    }
}

fn wants_gzip(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

/// Writes a volume as `uint8` or `float32` NIfTI-1; a `.gz` extension selects
/// gzip compression.
pub fn write_nifti(vol: &Volume3D, path: impl AsRef<Path>, dtype: DataType) -> Result<()> {
    if !matches!(dtype, DataType::Uint8 | DataType::Float32) {
        return Err(Error::InvalidParameter(format!(
            "output datatype must be uint8 or float32, got {}",
            dtype.name()
        )));
    }
    let path = path.as_ref();
    let opts = WriteOptions {
        dtype,
        byte_order: ByteOrder::Little,
        gzip: wants_gzip(path),
    };
    let bytes = encode_nifti(vol, opts)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a mask as 0/1 `uint8`.
pub fn write_mask(mask: &BinaryMask3D, path: impl AsRef<Path>) -> Result<()> {
    write_nifti(&mask.to_volume(), path, DataType::Uint8)
}
