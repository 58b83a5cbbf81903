//! Prints the magnitude response of the filters behind the EQ degradations.

use remaster::filters::{design_filter, FilterSpec, CHEBYSHEV_STOPBAND_DB};

fn main() -> remaster::Result<()> {
    let sr = 44_100.0;
    let specs = [
        ("high shelf 6 kHz -10 dB", FilterSpec::HighShelf { freq: 6_000.0, gain_db: -10.0 }),
        ("low shelf 120 Hz -15 dB", FilterSpec::LowShelf { freq: 120.0, gain_db: -15.0 }),
        ("peaking 1 kHz +6 dB", FilterSpec::Peaking { freq: 1_000.0, gain_db: 6.0, q: std::f64::consts::SQRT_2 }),
        ("butterworth lp 2 kHz order 4", FilterSpec::ButterworthLowpass { cutoff: 2_000.0, order: 4 }),
        (
            "chebyshev II bp 200-500 Hz",
            FilterSpec::Chebyshev2Bandpass { low: 200.0, high: 500.0, stopband_atten_db: CHEBYSHEV_STOPBAND_DB },
        ),
    ];
    let freqs = [50.0, 120.0, 300.0, 1_000.0, 2_000.0, 4_000.0, 6_000.0, 12_000.0];
    print!("{:<30}", "Hz");
    for f in freqs {
        print!("{f:>8.0}");
    }
    println!();
    for (name, spec) in specs {
        let chain = design_filter(&spec, sr)?;
        print!("{name:<30}");
        for f in freqs {
            print!("{:>8.2}", chain.magnitude_db(f, sr));
        }
        println!();
    }
    Ok(())
}
