//! Fuzz the binary checkpoint reader: arbitrary bytes must either parse
//! or fail cleanly, and anything that parses must re-encode to the same
//! bytes.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 20 {
        return;
    }
    match cavg::checkpoint::decode(data) {
        Ok(cavg::checkpoint::Checkpoint::Field(f)) => {
            let bytes = cavg::checkpoint::encode_field(&f);
            assert_eq!(bytes, data, "field checkpoints must round-trip byte-exactly");
        }
        Ok(cavg::checkpoint::Checkpoint::Covariance { trunc, blocks }) => {
            let bytes = cavg::checkpoint::encode_covariance(trunc, &blocks);
            assert_eq!(bytes, data, "covariance checkpoints must round-trip byte-exactly");
        }
        Err(_) => {}
    }
});
