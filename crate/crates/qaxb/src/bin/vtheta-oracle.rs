//! Emits reference values of Vθ on a uniform grid as CSV (theta,x,re,im).
//!
//! usage: vtheta-oracle [--shifted] [--theta 6] [--from -8] [--to 8] [--points 100]

use qaxb::oracle::RayOracle;

fn main() {
    let mut shifted = false;
    let mut thetas = Vec::new();
    let (mut from, mut to, mut points) = (-8.0f64, 8.0f64, 100usize);
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        let mut val = || args.next().unwrap_or_else(|| die(&format!("missing value for {a}")));
        match a.as_str() {
            "--shifted" => shifted = true,
            "--theta" => thetas.push(parse(&val())),
            "--from" => from = parse(&val()),
            "--to" => to = parse(&val()),
            "--points" => points = parse::<f64>(&val()) as usize,
            _ => die(&format!("unknown argument {a}")),
        }
    }
    if thetas.is_empty() {
        thetas = vec![6.0, 10.0];
    }
    if points < 2 {
        die("need at least two points");
    }
    println!("theta,x,re,im");
    for th in thetas {
        let o = RayOracle::new(th);
        for i in 0..points {
            let x = from + (to - from) * i as f64 / (points - 1) as f64;
            let v = if shifted { o.v_shifted(x) } else { o.v(x) };
            println!("{th},{x:.17e},{:.17e},{:.17e}", v.re, v.im);
        }
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> T {
    s.parse().unwrap_or_else(|_| die(&format!("cannot parse {s}")))
}

fn die(msg: &str) -> ! {
    eprintln!("vtheta-oracle: {msg}");
    std::process::exit(2)
}
