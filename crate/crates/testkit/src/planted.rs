//! A synthetic corpus where each of 20 documents carries one planted fact
//! and 30 filler documents carry none. Each question shares its distinctive
//! words with exactly one fact sentence.

pub struct PlantedDoc {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

pub struct PlantedQa {
    pub question: &'static str,
    pub answer: &'static str,
    pub doc_id: String,
}

/// (lead sentence, fact sentence, trailing sentence, question, gold answer)
const FACTS: [(&str, &str, &str, &str, &str); 20] = [
    (
        "The registrar publishes the academic calendar each spring.",
        "Classes for the Fall 2024 semester begin on August 26, 2024.",
        "Add and drop deadlines follow two weeks later.",
        "When do classes for the Fall 2024 semester begin?",
        "August 26, 2024",
    ),
    (
        "Hunt Library has four floors of study space.",
        "The Hunt Library reading room closes at 11 pm on weekdays.",
        "Group rooms can be reserved online.",
        "When does the Hunt Library reading room close on weekdays?",
        "11 pm",
    ),
    (
        "The band performs at every home football game.",
        "The Kiltie Band rehearses every Tuesday evening in the Cohon Center ballroom.",
        "New members audition in September.",
        "Where does the Kiltie Band rehearse every Tuesday evening?",
        "Cohon Center ballroom",
    ),
    (
        "Buggy teams train for months before race day.",
        "Sweepstakes buggy races start at 8 am on Flagstaff Hill.",
        "Spectators line Schenley Drive to watch.",
        "Where do Sweepstakes buggy races start at 8 am?",
        "Flagstaff Hill",
    ),
    (
        "Robotics research spans manipulation, perception and field systems.",
        "The Robotics Institute was founded in 1979 by Raj Reddy.",
        "It now hosts hundreds of researchers.",
        "Who founded the Robotics Institute in 1979?",
        "Raj Reddy",
    ),
    (
        "Dining services operate a dozen venues on campus.",
        "The Schatz Dining Room serves brunch on Sundays from 10 am to 2 pm.",
        "Meal blocks are accepted at every venue.",
        "When does the Schatz Dining Room serve brunch on Sundays?",
        "10 am to 2 pm",
    ),
    (
        "Graduate housing is limited and assigned by lottery.",
        "The graduate housing lottery application deadline is March 15.",
        "Results are emailed in early April.",
        "What is the graduate housing lottery application deadline?",
        "March 15",
    ),
    (
        "The shuttle network connects campus to nearby neighborhoods.",
        "The Squirrel Hill shuttle route departs every 20 minutes from Morewood Avenue.",
        "Service ends at midnight on weekdays.",
        "How often does the Squirrel Hill shuttle route depart from Morewood Avenue?",
        "every 20 minutes",
    ),
    (
        "The fitness center offers classes for all levels.",
        "The Tepper Fitness Center swimming pool is 25 yards long with eight lanes.",
        "Lap swim hours are posted weekly.",
        "How long is the Tepper Fitness Center swimming pool?",
        "25 yards",
    ),
    (
        "Commencement draws thousands of families to campus.",
        "The 2025 commencement ceremony takes place in Gesling Stadium on May 11.",
        "Tickets are not required for guests.",
        "Where does the 2025 commencement ceremony take place?",
        "Gesling Stadium on May 11",
    ),
    (
        "The counseling center offers confidential support.",
        "Counseling and Psychological Services can be reached at 412-268-2922 around the clock.",
        "Walk-in hours are also available.",
        "What number reaches Counseling and Psychological Services around the clock?",
        "412-268-2922",
    ),
    (
        "The art museum collection rotates each season.",
        "The Miller Gallery exhibition on kinetic sculpture opens on February 3.",
        "Admission to the gallery is free.",
        "When does the Miller Gallery exhibition on kinetic sculpture open?",
        "February 3",
    ),
    (
        "Student organizations register through the activities office.",
        "There are more than 400 registered student organizations on campus.",
        "New groups may form at any time.",
        "How many registered student organizations are there on campus?",
        "more than 400",
    ),
    (
        "The computing help desk supports students and staff.",
        "Eduroam wireless access requires your Andrew ID and password.",
        "Guest networks are also provided.",
        "What does Eduroam wireless access require?",
        "Andrew ID and password",
    ),
    (
        "Undergraduate research is encouraged in every college.",
        "Summer Undergraduate Research Fellowship applications are due on February 20.",
        "Awards include a stipend for ten weeks.",
        "When are Summer Undergraduate Research Fellowship applications due?",
        "February 20",
    ),
    (
        "Parking on campus requires a permit.",
        "East Campus Garage parking permits cost 1,100 dollars per academic year.",
        "Evening permits are cheaper.",
        "How much do East Campus Garage parking permits cost per academic year?",
        "1,100 dollars",
    ),
    (
        "The Fence is a campus landmark painted by student groups.",
        "Painting the Fence is allowed only between midnight and sunrise.",
        "Groups guard it through the night.",
        "When is painting the Fence allowed?",
        "between midnight and sunrise",
    ),
    (
        "The drama school stages productions throughout the year.",
        "The Purnell Center houses the Philip Chosky Theater with 400 seats.",
        "Student tickets are discounted.",
        "How many seats does the Philip Chosky Theater in the Purnell Center have?",
        "400 seats",
    ),
    (
        "International students receive support from a dedicated office.",
        "The Office of International Education holds orientation on August 19.",
        "Attendance is mandatory for new visa holders.",
        "When does the Office of International Education hold orientation?",
        "August 19",
    ),
    (
        "Campus tours are led by student ambassadors.",
        "Admission tours leave from Warner Hall at 10 am and 2 pm daily.",
        "Reservations are recommended in summer.",
        "Where do admission tours leave from at 10 am and 2 pm daily?",
        "Warner Hall",
    ),
];

const FILLER_WORDS: [&str; 40] = [
    "garden", "soil", "compost", "seedling", "harvest", "trellis", "mulch", "orchard", "pruning", "irrigation",
    "tomato", "basil", "clover", "hedge", "meadow", "pollinator", "greenhouse", "rainfall", "frost", "sapling",
    "lantern", "pebble", "river", "canoe", "ridge", "valley", "granite", "moss", "fern", "heron", "willow",
    "cedar", "maple", "thicket", "glacier", "dune", "lagoon", "marsh", "tide", "breeze",
];

fn lcg(state: &mut u64) -> u64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    *state >> 33
}

fn filler_text(i: usize) -> String {
    let mut s = 0x9e37_79b9_u64 ^ i as u64;
    let mut sentences = Vec::new();
    for _ in 0..6 {
        let n = 6 + (lcg(&mut s) % 5) as usize;
        let words: Vec<&str> = (0..n).map(|_| FILLER_WORDS[(lcg(&mut s) % 40) as usize]).collect();
        let mut sentence = words.join(" ");
        sentence[..1].make_ascii_uppercase();
        sentence.push('.');
        sentences.push(sentence);
    }
    sentences.join(" ")
}

/// 20 fact documents (`fact-00`..`fact-19`) then 30 filler documents.
pub fn documents() -> Vec<PlantedDoc> {
    let mut docs: Vec<PlantedDoc> = FACTS
        .iter()
        .enumerate()
        .map(|(i, (lead, fact, tail, _, _))| PlantedDoc {
            doc_id: format!("fact-{i:02}"),
            title: format!("Campus note {i}"),
            text: format!("{lead} {fact} {tail}"),
        })
        .collect();
    docs.extend((0..30).map(|i| PlantedDoc {
        doc_id: format!("filler-{i:02}"),
        title: format!("Nature note {i}"),
        text: filler_text(i),
    }));
    docs
}

pub fn qa_pairs() -> Vec<PlantedQa> {
    FACTS
        .iter()
        .enumerate()
        .map(|(i, (_, _, _, q, a))| PlantedQa {
            question: q,
            answer: a,
            doc_id: format!("fact-{i:02}"),
        })
        .collect()
}

/// The sentence each question should be answered from.
pub fn fact_sentence(i: usize) -> &'static str {
    FACTS[i].1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let docs = documents();
        assert_eq!(docs.len(), 50);
        assert_eq!(qa_pairs().len(), 20);
        for (i, qa) in qa_pairs().iter().enumerate() {
            let fact = fact_sentence(i).to_lowercase();
            for w in qa.answer.split_whitespace() {
                assert!(fact.contains(&w.to_lowercase()), "{w} not in fact {i}");
            }
        }
    }
}
