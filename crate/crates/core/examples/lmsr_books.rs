//! Binary and K-state LMSR books: filling to a price, paying for shares,
//! and the worst-case loss at settlement.

use parlay_core::lmsr::{expected_loss_kl, BinaryBook, KStateBook};

fn main() {
    let b = 100.0;
    let mut book = BinaryBook::new(b);
    let fill = book.fill_to_price(0.7);
    println!("binary: 0.50 -> {:.2}, bought {:.3} shares for {:.3}", fill.price_post, fill.delta_shares, fill.cash);
    println!("expected loss b*KL(0.7 || 0.5) = {:.4}", expected_loss_kl(0.7, 0.5, b));
    let fill = book.fill_shares(-20.0);
    println!("sold 20 back: price {:.4}, cash {:.3}", fill.price_post, fill.cash);
    println!("settle YES {:.3}, NO {:.3}, bound b ln 2 = {:.3}", book.settle(true), book.settle(false), b * 2f64.ln());

    let mut k = KStateBook::uniform(4, b);
    k.fill_to_target(&[0.1, 0.2, 0.3, 0.4]);
    let p = k.prices();
    println!("4-state prices {p:.3?}");
    let worst = (0..4).map(|o| k.settle(o)).fold(f64::NEG_INFINITY, f64::max);
    println!("worst settlement {worst:.3}, bound b ln 4 = {:.3}", b * 4f64.ln());
}
