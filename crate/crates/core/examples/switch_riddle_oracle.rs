//! Exact value of the designated-counter strategy and of the best
//! memoryless no-communication policy in the 3-prisoner riddle.

use ecmarl::env::designated_counter_reward;
use ecmarl::experiment::switch_oracle;

fn main() -> ecmarl::Result<()> {
    let report = switch_oracle(3, Some(6), 0, 0)?;
    print!("{}", report.render());
    println!("as a fraction: {}/729", (report.designated_counter * 729.0).round());

    // a single schedule: prisoner 0 counts, 1 and 2 each switch the bulb on once
    let schedule = [1, 0, 2, 0, 1, 1];
    println!(
        "schedule {schedule:?} under the designated counter scores {}",
        designated_counter_reward(3, &schedule)?
    );
    Ok(())
}
