//! C ABI over `facefuse`.
//!
//! Every function returns an [`FfStatus`]. On failure a message is kept per thread and can be
//! read with [`ff_last_error_message`] until the next call on that thread. Objects are opaque
//! handles owned by the caller and released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use facefuse::fusion::{self, FusionConfig, MassFunction, NormalizationStats};
use facefuse::landmarks::{default_landmarks, LandmarkSet, Region};
use facefuse::matching::MissingRegionPolicy;
use facefuse::pipeline::{self, FaceTemplate, PipelineConfig};
use facefuse::{Error, Image};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    UnsupportedFormat = 4,
    CorruptData = 5,
    InvalidDimensions = 6,
    ImageTooSmall = 7,
    MissingRegion = 8,
    EmptyFeatureSet = 9,
    TotalConflict = 10,
    InvalidMass = 11,
    Config = 12,
    Other = 98,
    Panic = 99,
}

impl From<&Error> for FfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } | Error::MissingFile(_) => FfStatus::Io,
            Error::UnsupportedFormat(_) => FfStatus::UnsupportedFormat,
            Error::CorruptData(_) | Error::Parse { .. } => FfStatus::CorruptData,
            Error::InvalidDimensions { .. } => FfStatus::InvalidDimensions,
            Error::ImageTooSmall { .. } => FfStatus::ImageTooSmall,
            Error::MissingRegion(_) => FfStatus::MissingRegion,
            Error::EmptyFeatureSet => FfStatus::EmptyFeatureSet,
            Error::TotalConflict(_) => FfStatus::TotalConflict,
            Error::InvalidBelief(_) | Error::InvariantViolation(_) => FfStatus::InvalidMass,
            Error::Config(_) | Error::DegenerateRange(_) => FfStatus::Config,
            _ => FfStatus::Other,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfRegion {
    LeftEye = 0,
    RightEye = 1,
    Nose = 2,
    Mouth = 3,
}

impl From<FfRegion> for Region {
    fn from(r: FfRegion) -> Self {
        match r {
            FfRegion::LeftEye => Region::LeftEye,
            FfRegion::RightEye => Region::RightEye,
            FfRegion::Nose => Region::Nose,
            FfRegion::Mouth => Region::Mouth,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfMissingRegion {
    Strict = 0,
    Skip = 1,
}

/// Landmark coordinates in the 100x140 working frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfLandmarks {
    pub left_eye_x: f64,
    pub left_eye_y: f64,
    pub right_eye_x: f64,
    pub right_eye_y: f64,
    pub nose_x: f64,
    pub nose_y: f64,
    pub mouth_x: f64,
    pub mouth_y: f64,
}

impl From<&FfLandmarks> for LandmarkSet {
    fn from(l: &FfLandmarks) -> Self {
        LandmarkSet {
            left_eye: (l.left_eye_x, l.left_eye_y),
            right_eye: (l.right_eye_x, l.right_eye_y),
            nose: (l.nose_x, l.nose_y),
            mouth: (l.mouth_x, l.mouth_y),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfMass {
    pub m_genuine: f64,
    pub m_impostor: f64,
    pub m_theta: f64,
}

impl From<MassFunction> for FfMass {
    fn from(m: MassFunction) -> Self {
        Self {
            m_genuine: m.m_genuine,
            m_impostor: m.m_impostor,
            m_theta: m.m_theta,
        }
    }
}

impl FfMass {
    fn to_mass(self) -> Result<MassFunction, Failure> {
        Ok(MassFunction::new(self.m_genuine, self.m_impostor, self.m_theta)?)
    }
}

/// Opaque decoded grayscale image.
pub struct FfImage(Image);

/// Opaque enrolled face template.
pub struct FfTemplate(FaceTemplate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(FfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(FfStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FfStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording failures and containing panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            FfStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn pipeline_config(policy: FfMissingRegion) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.matching.policy = match policy {
        FfMissingRegion::Strict => MissingRegionPolicy::Strict,
        FfMissingRegion::Skip => MissingRegionPolicy::Skip,
    };
    cfg
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ff_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a PGM (P2/P5) image from a nul-terminated UTF-8 path.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_image_load(path: *const c_char, out: *mut *mut FfImage) -> FfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(FfStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
        let image = facefuse::load_image(path)?;
        write_out(out, Box::into_raw(Box::new(FfImage(image))))
    })
}

/// Copies `width * height` row-major 8-bit pixels into a new image.
///
/// # Safety
/// `pixels` must point to `width * height` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_image_from_gray(
    width: usize,
    height: usize,
    pixels: *const u8,
    out: *mut *mut FfImage,
) -> FfStatus {
    guard(|| {
        if pixels.is_null() {
            return Err(null("pixels"));
        }
        let len = width
            .checked_mul(height)
            .ok_or_else(|| Failure(FfStatus::InvalidDimensions, "image size overflows".into()))?;
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        let image = Image::new(width, height, data)?;
        write_out(out, Box::into_raw(Box::new(FfImage(image))))
    })
}

/// # Safety
/// `image` must be a live handle; `width` and `height` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_image_size(image: *const FfImage, width: *mut usize, height: *mut usize) -> FfStatus {
    guard(|| {
        let image = &deref(image, "image")?.0;
        write_out(width, image.width())?;
        write_out(height, image.height())
    })
}

/// # Safety
/// `image` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ff_image_free(image: *mut FfImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Enrols an image with default parameters. `landmarks` may be null for the default geometry.
///
/// # Safety
/// `image` must be a live handle, `landmarks` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_template_enrol(
    image: *const FfImage,
    landmarks: *const FfLandmarks,
    out: *mut *mut FfTemplate,
) -> FfStatus {
    guard(|| {
        let image = &deref(image, "image")?.0;
        let lm = match landmarks.as_ref() {
            Some(l) => LandmarkSet::from(l),
            None => default_landmarks(facefuse::image::WORKING_WIDTH, facefuse::image::WORKING_HEIGHT),
        };
        let (template, _) = pipeline::enrol(image, &lm, &PipelineConfig::default())?;
        write_out(out, Box::into_raw(Box::new(FfTemplate(template))))
    })
}

/// # Safety
/// `template` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_template_keypoint_count(template: *const FfTemplate, count: *mut usize) -> FfStatus {
    guard(|| write_out(count, deref(template, "template")?.0.keypoint_count))
}

/// # Safety
/// `template` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_template_region_count(
    template: *const FfTemplate,
    region: FfRegion,
    count: *mut usize,
) -> FfStatus {
    guard(|| write_out(count, deref(template, "template")?.0.regions.get(region.into()).len()))
}

/// # Safety
/// `template` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ff_template_free(template: *mut FfTemplate) {
    if !template.is_null() {
        drop(Box::from_raw(template));
    }
}

/// Sum of the four region distances between two templates.
///
/// # Safety
/// Both templates must be live handles and `distance` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_match_local(
    probe: *const FfTemplate,
    gallery: *const FfTemplate,
    policy: FfMissingRegion,
    distance: *mut f64,
) -> FfStatus {
    guard(|| {
        let (p, g) = (&deref(probe, "probe")?.0, &deref(gallery, "gallery")?.0);
        let d = pipeline::local_distance(p, g, &pipeline_config(policy).matching)?;
        write_out(distance, d)
    })
}

/// Symmetric modified Hausdorff distance over the concatenated region keypoints.
///
/// # Safety
/// Both templates must be live handles and `distance` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_match_global(
    probe: *const FfTemplate,
    gallery: *const FfTemplate,
    distance: *mut f64,
) -> FfStatus {
    guard(|| {
        let (p, g) = (&deref(probe, "probe")?.0, &deref(gallery, "gallery")?.0);
        let d = pipeline::global_distance(p, g, &PipelineConfig::default().matching)?;
        write_out(distance, d)
    })
}

/// Mass function of a min-max normalized distance in `[0, 1]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_score_to_mass(normalized_distance: f64, alpha: f64, out: *mut FfMass) -> FfStatus {
    guard(|| {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Failure(FfStatus::InvalidArgument, format!("alpha must lie in (0, 1], got {alpha}")));
        }
        write_out(out, fusion::score_to_mass(normalized_distance, alpha).into())
    })
}

/// Dempster's orthogonal sum of two mass functions.
///
/// # Safety
/// `a` and `b` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_dempster_combine(a: *const FfMass, b: *const FfMass, out: *mut FfMass) -> FfStatus {
    guard(|| {
        let a = deref(a, "a")?.to_mass()?;
        let b = deref(b, "b")?.to_mass()?;
        write_out(out, fusion::dempster_combine(&a, &b)?.into())
    })
}

/// Normalizes both distances, combines their masses and applies `m_genuine >= psi`.
///
/// # Safety
/// `mass` and `accepted` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ff_fuse_and_decide(
    local_distance: f64,
    global_distance: f64,
    local_min: f64,
    local_max: f64,
    global_min: f64,
    global_max: f64,
    alpha: f64,
    psi: f64,
    mass: *mut FfMass,
    accepted: *mut bool,
) -> FfStatus {
    guard(|| {
        let sl = NormalizationStats::new(local_min, local_max)?;
        let sg = NormalizationStats::new(global_min, global_max)?;
        let config = FusionConfig {
            alpha,
            threshold_psi: psi,
        };
        config.validate()?;
        let (m, accept) = fusion::fuse_and_decide(local_distance, global_distance, &sl, &sg, &config)?;
        write_out(mass, m.into())?;
        write_out(accepted, accept)
    })
}
