//! The `svip` command-line interface.
//!
//! One subcommand per pipeline capability:
//!
//! * `filter` — run the streaming 5×5 filter over an image.
//! * `binarize` — the full adaptive binarization pipeline.
//! * `send` / `recv` — the two ends of the encrypted image link, over
//!   TCP or stdin/stdout (`-`).
//! * `roundtrip` — both ends at once over an in-memory loopback.
//! * `rc4-keystream` — dump keystream bytes for vector checking.
//!
//! Exit codes: 0 success, 1 usage error, 2 processing error. Processing
//! errors print one line on stderr shaped `error: <category>: <detail>`,
//! with stable categories (`parse`, `dimension`, `integrity`, …) so
//! scripts can grep for the failure class.

use std::ffi::OsString;
use std::fmt;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::filter::{convolve_streaming, FilterError, Kernel, KernelError};
use crate::imaging::{
    load_image, read_image, save_image, write_image, Image, ImageError, PnmError, RgbImage,
};
use crate::rc4::{Key, KeyError, Rc4State};
use crate::threshold::{binarize_color_with, binarize_gray_with, PipelineOptions, ThresholdError};
use crate::transport::{
    loopback, recv_image, recv_image_unverified, send_image, TransportError,
};

#[derive(Parser)]
#[command(
    name = "svip",
    version,
    about = "Streaming image filtering, adaptive binarization, and RC4-framed image transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convolve an image with a 5x5 kernel (streaming line-buffer engine).
    Filter {
        /// Input PGM/PPM path, or - for stdin.
        input: String,
        /// Output path, or - for stdout.
        output: String,
        /// Kernel: box5, identity, or @FILE with 26 integers
        /// (25 row-major coefficients, then the divisor).
        #[arg(long, default_value = "box5")]
        kernel: String,
    },
    /// Smooth, threshold at the per-channel mean, and binarize an image.
    Binarize {
        /// Input PGM/PPM path, or - for stdin.
        input: String,
        /// Output PGM path (0/255 pixels), or - for stdout.
        output: String,
        /// Histogram sampling stride for the mean (1 = every pixel).
        #[arg(long, default_value_t = 1)]
        stride: u32,
        /// Mark pixels below the mean as foreground instead of above.
        #[arg(long)]
        invert: bool,
        /// Print the per-channel thresholds (R, G, B order) to stdout.
        #[arg(long)]
        dump_threshold: bool,
    },
    /// Encrypt an image and send it as one frame.
    Send {
        /// Destination: host:port, or - for stdout.
        #[arg(long)]
        to: String,
        #[command(flatten)]
        key: KeyArgs,
        /// Image to send (PGM/PPM path, or - for stdin).
        image: String,
    },
    /// Receive one frame, decrypt it, and write the image.
    Recv {
        /// Source: host:port to listen on, or - for stdin.
        #[arg(long)]
        listen: String,
        #[command(flatten)]
        key: KeyArgs,
        /// Where to write the received image.
        #[arg(long)]
        out: String,
        /// Skip the checksum check and keep whatever was decrypted.
        #[arg(long)]
        no_verify: bool,
    },
    /// Send and receive over an in-memory loopback and verify bit-identity.
    Roundtrip {
        #[command(flatten)]
        key: KeyArgs,
        /// Image to push through the loopback.
        image: String,
    },
    /// Print RC4 keystream bytes for a key as uppercase hex.
    Rc4Keystream {
        #[command(flatten)]
        key: KeyArgs,
        /// How many keystream bytes to emit.
        #[arg(long)]
        count: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct KeyArgs {
    /// Key bytes as hex, e.g. 4B6579.
    #[arg(long)]
    key_hex: Option<String>,
    /// File whose raw bytes are the key.
    #[arg(long)]
    key_file: Option<PathBuf>,
}

/// A processing failure, tagged with its greppable category.
#[derive(Debug)]
enum AppError {
    Pnm(PnmError),
    Image(ImageError),
    Kernel(KernelError),
    Filter(FilterError),
    Threshold(ThresholdError),
    Key(KeyError),
    Transport(TransportError),
    /// Category + message, for failures outside the library modules.
    Other(&'static str, String),
}

impl From<PnmError> for AppError {
    fn from(e: PnmError) -> Self {
        AppError::Pnm(e)
    }
}
impl From<ImageError> for AppError {
    fn from(e: ImageError) -> Self {
        AppError::Image(e)
    }
}
impl From<KernelError> for AppError {
    fn from(e: KernelError) -> Self {
        AppError::Kernel(e)
    }
}
impl From<FilterError> for AppError {
    fn from(e: FilterError) -> Self {
        AppError::Filter(e)
    }
}
impl From<ThresholdError> for AppError {
    fn from(e: ThresholdError) -> Self {
        AppError::Threshold(e)
    }
}
impl From<KeyError> for AppError {
    fn from(e: KeyError) -> Self {
        AppError::Key(e)
    }
}
impl From<TransportError> for AppError {
    fn from(e: TransportError) -> Self {
        AppError::Transport(e)
    }
}

impl AppError {
    fn category(&self) -> &'static str {
        match self {
            AppError::Pnm(e) => match e {
                PnmError::Io { .. } | PnmError::Stream(_) => "io",
                PnmError::BadMagic { .. }
                | PnmError::BadToken { .. }
                | PnmError::MissingField { .. } => "parse",
                PnmError::UnsupportedMaxval { .. } => "unsupported",
                PnmError::TooLarge { .. } => "dimension",
                PnmError::Truncated { .. } => "truncated",
                PnmError::Image(_) => "dimension",
            },
            AppError::Image(_) => "dimension",
            AppError::Kernel(_) => "kernel",
            AppError::Filter(_) => "dimension",
            AppError::Threshold(e) => match e {
                ThresholdError::Filter(_) | ThresholdError::DimensionMismatch(_) => "dimension",
                _ => "threshold",
            },
            AppError::Key(_) => "key",
            AppError::Transport(e) => match e {
                TransportError::BadMagic { .. }
                | TransportError::Channels { .. }
                | TransportError::EmptyImage { .. } => "protocol",
                TransportError::Version { .. } => "version",
                TransportError::TooLarge { .. } => "dimension",
                TransportError::Truncated { .. } => "truncated",
                TransportError::Integrity => "integrity",
                TransportError::Send { .. } | TransportError::Io(_) => "transport",
                TransportError::Image(_) => "dimension",
            },
            AppError::Other(category, _) => category,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: {}: ", self.category())?;
        match self {
            AppError::Pnm(e) => write!(f, "{e}"),
            AppError::Image(e) => write!(f, "{e}"),
            AppError::Kernel(e) => write!(f, "{e}"),
            AppError::Filter(e) => write!(f, "{e}"),
            AppError::Threshold(e) => write!(f, "{e}"),
            AppError::Key(e) => write!(f, "{e}"),
            AppError::Transport(e) => write!(f, "{e}"),
            AppError::Other(_, msg) => write!(f, "{msg}"),
        }
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code: 0 success, 1 usage, 2 processing failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here too; they are not usage errors
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), AppError> {
    match command {
        Command::Filter {
            input,
            output,
            kernel,
        } => cmd_filter(&input, &output, &kernel),
        Command::Binarize {
            input,
            output,
            stride,
            invert,
            dump_threshold,
        } => cmd_binarize(&input, &output, stride, invert, dump_threshold),
        Command::Send { to, key, image } => cmd_send(&to, &key, &image),
        Command::Recv {
            listen,
            key,
            out,
            no_verify,
        } => cmd_recv(&listen, &key, &out, no_verify),
        Command::Roundtrip { key, image } => cmd_roundtrip(&key, &image),
        Command::Rc4Keystream { key, count } => cmd_keystream(&key, count),
    }
}

fn load_key(args: &KeyArgs) -> Result<Key, AppError> {
    let bytes = if let Some(hex_text) = &args.key_hex {
        hex::decode(hex_text.trim())
            .map_err(|e| AppError::Other("key", format!("invalid hex key: {e}")))?
    } else if let Some(path) = &args.key_file {
        std::fs::read(path)
            .map_err(|e| AppError::Other("key", format!("{}: {e}", path.display())))?
    } else {
        unreachable!("clap enforces the key group");
    };
    Ok(Key::new(bytes)?)
}

fn load_input(path: &str) -> Result<Image, AppError> {
    if path == "-" {
        let stdin = io::stdin();
        let mut lock = stdin.lock();
        Ok(read_image(&mut lock)?)
    } else {
        Ok(load_image(path)?)
    }
}

fn save_output(path: &str, image: &Image) -> Result<(), AppError> {
    if path == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        write_image(&mut lock, image)?;
    } else {
        save_image(path, image)?;
    }
    Ok(())
}

fn parse_kernel(spec: &str) -> Result<Kernel, AppError> {
    match spec {
        "box5" => Ok(Kernel::box5()),
        "identity" => Ok(Kernel::identity()),
        other => {
            if let Some(path) = other.strip_prefix('@') {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| AppError::Other("kernel", format!("{path}: {e}")))?;
                Ok(text.parse()?)
            } else {
                Err(AppError::Other(
                    "kernel",
                    format!("unknown kernel {other:?}; use box5, identity, or @FILE"),
                ))
            }
        }
    }
}

fn cmd_filter(input: &str, output: &str, kernel_spec: &str) -> Result<(), AppError> {
    let kernel = parse_kernel(kernel_spec)?;
    let filtered = match load_input(input)? {
        Image::Gray(plane) => Image::Gray(convolve_streaming(&plane, &kernel)?),
        Image::Rgb(rgb) => {
            let (r, g, b) = rgb.split_channels();
            Image::Rgb(RgbImage::from_channels(
                convolve_streaming(&r, &kernel)?,
                convolve_streaming(&g, &kernel)?,
                convolve_streaming(&b, &kernel)?,
            )?)
        }
    };
    save_output(output, &filtered)
}

fn cmd_binarize(
    input: &str,
    output: &str,
    stride: u32,
    invert: bool,
    dump_threshold: bool,
) -> Result<(), AppError> {
    if stride == 0 {
        return Err(AppError::Other(
            "threshold",
            "stride must be at least 1".to_owned(),
        ));
    }
    let opts = PipelineOptions { stride, invert };
    let (mask, thresholds) = match load_input(input)? {
        Image::Gray(plane) => {
            let got = binarize_gray_with(&plane, &opts)?;
            (got.output, vec![got.threshold])
        }
        Image::Rgb(rgb) => {
            let got = binarize_color_with(&rgb, &opts)?;
            (got.output, got.thresholds.to_vec())
        }
    };
    save_output(output, &Image::Gray(mask.to_display()))?;
    if dump_threshold {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        for t in thresholds {
            writeln!(lock, "{t}").map_err(|e| AppError::Other("io", e.to_string()))?;
        }
    }
    Ok(())
}

fn cmd_send(to: &str, key_args: &KeyArgs, image_path: &str) -> Result<(), AppError> {
    let key = load_key(key_args)?;
    let image = load_input(image_path)?;
    if to == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        send_image(&mut lock, &image, &key)?;
    } else {
        let stream = TcpStream::connect(to)
            .map_err(|e| AppError::Other("transport", format!("connect {to}: {e}")))?;
        let mut writer = BufWriter::new(stream);
        send_image(&mut writer, &image, &key)?;
    }
    Ok(())
}

fn cmd_recv(listen: &str, key_args: &KeyArgs, out: &str, no_verify: bool) -> Result<(), AppError> {
    let key = load_key(key_args)?;
    let receive = |mut reader: &mut dyn Read| -> Result<Option<Image>, TransportError> {
        if no_verify {
            recv_image_unverified(&mut reader, &key)
        } else {
            recv_image(&mut reader, &key)
        }
    };
    let image = if listen == "-" {
        let stdin = io::stdin();
        let mut lock = stdin.lock();
        receive(&mut lock)?
    } else {
        let listener = TcpListener::bind(listen)
            .map_err(|e| AppError::Other("transport", format!("listen {listen}: {e}")))?;
        let (stream, _) = listener
            .accept()
            .map_err(|e| AppError::Other("transport", format!("accept: {e}")))?;
        let mut reader = BufReader::new(stream);
        receive(&mut reader)?
    };
    let image = image.ok_or_else(|| {
        AppError::Other("transport", "end of stream before any frame".to_owned())
    })?;
    save_output(out, &image)
}

fn cmd_roundtrip(key_args: &KeyArgs, image_path: &str) -> Result<(), AppError> {
    let key = load_key(key_args)?;
    let image = load_input(image_path)?;
    let (mut tx, mut rx) = loopback(8 * 1024);

    let received = std::thread::scope(|scope| -> Result<Option<Image>, AppError> {
        let sender_key = key.clone();
        let sender_image = &image;
        let sender = scope.spawn(move || send_image(&mut tx, sender_image, &sender_key));
        let received = recv_image(&mut rx, &key)?;
        sender
            .join()
            .map_err(|_| AppError::Other("transport", "sender thread panicked".to_owned()))??;
        Ok(received)
    })?;

    match received {
        Some(got) if got == image => {
            println!("OK");
            Ok(())
        }
        Some(got) => {
            println!(
                "MISMATCH: sent {}x{} x{}, received {}x{} x{}, {} differing pixel bytes",
                image.width(),
                image.height(),
                image.channels(),
                got.width(),
                got.height(),
                got.channels(),
                diff_count(&image, &got),
            );
            Err(AppError::Other(
                "verify",
                "loopback roundtrip mismatch".to_owned(),
            ))
        }
        None => Err(AppError::Other(
            "transport",
            "loopback ended before any frame".to_owned(),
        )),
    }
}

fn diff_count(a: &Image, b: &Image) -> usize {
    fn bytes(img: &Image) -> Vec<u8> {
        match img {
            Image::Gray(p) => p.pixels().to_vec(),
            Image::Rgb(rgb) => rgb.interleave(),
        }
    }
    let (a, b) = (bytes(a), bytes(b));
    if a.len() != b.len() {
        return a.len().abs_diff(b.len());
    }
    a.iter().zip(&b).filter(|(x, y)| x != y).count()
}

fn cmd_keystream(key_args: &KeyArgs, count: usize) -> Result<(), AppError> {
    let key = load_key(key_args)?;
    let bytes = Rc4State::new(&key).keystream(count);
    println!("{}", hex::encode_upper(bytes));
    Ok(())
}
