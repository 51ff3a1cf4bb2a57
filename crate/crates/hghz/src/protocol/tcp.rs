//! Length-prefixed JSON framing for carrying messages over TCP.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use super::message::{Message, Transcript};

/// Frames above this size are refused on read.
pub const MAX_FRAME: u32 = 16 << 20;

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    let body = serde_json::to_vec(msg)?;
    let len = u32::try_from(body.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&body)
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Message>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes"),
        ));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body)
        .map(Some)
        .map_err(io::Error::from)
}

/// Sends every message of a transcript through a loopback socket and returns
/// what the receiving end decoded.
pub fn loopback_replay(t: &Transcript) -> io::Result<Transcript> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let reader = thread::spawn(move || -> io::Result<Transcript> {
        let (mut s, _) = listener.accept()?;
        let mut out = Transcript::default();
        while let Some(m) = read_frame(&mut s)? {
            out.messages.push(m);
        }
        Ok(out)
    });
    {
        let mut s = TcpStream::connect(addr)?;
        for m in &t.messages {
            write_frame(&mut s, m)?;
        }
    }
    reader
        .join()
        .map_err(|_| io::Error::other("reader thread panicked"))?
}
