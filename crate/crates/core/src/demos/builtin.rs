//! Default demonstrations used when no annotated store is loaded.

use super::{DemoKind, Demonstration, TrainingExample};

const MANHATTAN_Q: &str = "Which of the Manhattan Jaspers basketball team head coach was born in September 2, 1977?";
const CUTCHIN_Q: &str = "Coach Phil Cutchin served as the head football coach at Oklahoma State-University-Stillwater, which was originally known as what?";
const WISCONSIN_Q: &str = "Which Wisconsin state governor oversaw a vote to significantly limit public employee collective bargaining?";

const MANHATTAN_PLAN: &str =
    "Step 1: Who is the head coach of the Manhattan Jaspers basketball team? Step 2: When was the head coach born?";
const CUTCHIN_PLAN: &str = "Step 1: What was Oklahoma State University-Stillwater originally known as? Step 2: When did Phil Cutchin serve as the head football coach at Oklahoma State University-Stillwater?";

const MANHATTAN_PLAN_CONTEXT: &str = r#"[1] Steve Masiello | (born September 2, 1977) is an American college basketball coach and a former player. He most recently served as men's head coach at Manhattan College.
[2] Jaspers' new coach hopes to recapture MC's past glory | Manhattan College introduced Steve Masiello, center, who will take over as the Jaspers' new men's basketball coach.
[3] Steve Masiello (St. John's Red Storm) | Steve Masiello (born September 2, 1977). Current position: Associate head men's basketball coach. Current team: St. John's Red Storm (Head ..."#;

const CUTCHIN_PLAN_CONTEXT: &str = r#"[1] Phil Cutchin | Phil Cutchin (September 9, 1920 - January 7, 1999) was an American football player and coach. He served as the head football coach at Oklahoma State ...
[2] Former OSU Football Coach Cutchin Dies | In life, Phil Cutchin captained a Paul "Bear" Bryant football team, was an Army officer in two wars, a football coach and a stock broker.
[3] Phil Cutchin | American Football Database | Fandom | Phil Cutchin (September 9, 1920 - January 7, 1999) was an American football player and coach. He served as the head football coach at Oklahoma State ..."#;

const MANHATTAN_PREDICT_CONTEXT: &str = r#"[1] List of Manhattan Jaspers men's basketball head coaches | Manhattan's current head coach is John Gallagher. He was hired in March 2023, replacing RaShawn Stores, who was not promoted to the full-time position after ...
[2] Steve Masiello | Stephen John Masiello Jr. (born September 2, 1977) is an American college basketball coach and a former player. He most recently served as men's head coach ...
[3] Steve Masiello | (born September 2, 1977) is an American college basketball coach and a former player. He most recently served as men's head coach at Manhattan College.
[4] Manhattan College Appoints John Gallagher to Lead Men's ... | - John Gallagher has been named the new Head Men's Basketball Coach at Manhattan College, it was announced today by Director of Athletics ...
[5] List of Manhattan Jaspers men's basketball head coaches | Manhattan's current head coach is John Gallagher. He was hired in March 2023, replacing RaShawn Stores, who was not promoted to the full-time position after ...
[6] Jaspers' new coach hopes to recapture MC's past glory | Manhattan College introduced Steve Masiello, center, who will take over as the Jaspers' new men's basketball coach.
[7] Men's Basketball Coaches | Head Coach, 718-862-7533 718-862-7533 . jgallagher06@manhattan.edu, First Year ; Assistant Coach, 718-862-7533 718-862-7533 . tim.brooks@manhattan.edu, First ..."#;

const CUTCHIN_PREDICT_CONTEXT: &str = r#"[1] Oklahoma Agricultural and Mechanical College | Oklahoma Agricultural and Mechanical College, Founded on Christmas Day in 1890 under the Morrill Act as Oklahoma Agricultural and Mechanical College, Oklahoma State University has grown through its traditions and culture to become one of America's premier land-grant universities., Oklahoma Agricultural and Mechanical College
[2] Oklahoma State University-Stillwater | OSU was founded in 1890 under the Morrill Act. Originally known as Oklahoma Agricultural and Mechanical College (Oklahoma A&M), it is the flagship institution ...
[3] 1963 to 1968 | 1963 to 1968, Phil Cutchin (September 9, 1920 - January 7, 1999) was an American football player and coach. He served as the head football coach at Oklahoma State University-Stillwater from 1963 to 1968, compiling a record of 19-38-2., 1963 to 1968
[4] Former OSU Football Coach Cutchin Dies | Cutchin was head football coach at Oklahoma State from 1963 to 1968. He won only 19 games, but most all of his 40 defeats were given up ...
[5] Phil Cutchin | Phil Cutchin (September 9, 1920 - January 7, 1999) was an American football player and coach. He served as the head football coach at Oklahoma State ...
[6] OSU History | The college's first students attended classes in the Stillwater Congregational Church. The original campus consisted of 200 acres of prairie that were ...
[7] Phil Cutchin | American Football Database | Fandom | He served as the head football coach at Oklahoma State University-Stillwater from 1963 to 1968, compiling a record of 19-38-2. Although he never had a winning ..."#;

const WISCONSIN_PREDICT_CONTEXT: &str = r#"[1] Unions file lawsuit challenging Wisconsin Act 10 | Former Republican Gov. Scott Walker signed the law in 2011 despite some of the largest protests in state history, and the law has since shaped the state's political landscape., Scott Walker
[2] Act 10 turns 10: Four takeaways from the law that shook ... | Here's a look at how the law limiting collective bargaining for most public workers has played out.
[3] Act 10 turns 10: Four takeaways from the law that shook ... | Act 10 ended the ability of public-sector unions to negotiate over any issues other than raises, and those raises were capped at the rate of ...
[4] Wisconsin Teachers Sue to Restore Collective Bargaining ... | The law, which was championed by former Republican Gov. Scott Walker, has been challenged unsuccessfully in court before. But the political context has changed: The Wisconsin Supreme Court recently flipped to liberal control for the first time in 15 years., Scott Walker
[5] Wis. governor officially cuts collective bargaining | Scott Walker has officially taken away nearly all collective bargaining rights from the vast majority of the state's public employees. Walker ...
[6] 10 years later, Wisconsinites are still divided over Act 10 | Former Gov. Scott Walker's landmark legislation required public employees to pay more for their pensions and health care and limited their ...
[7] Wisconsin's Act 10 limitations on collective bargaining | With its 5-2 vote upholding the law, the Wisconsin Supreme Court gave an important nod towards the constitutionality of limits of collective bargaining rights ..."#;

fn example(id: &str, question: &str, gold: &str) -> TrainingExample {
    TrainingExample {
        id: id.to_string(),
        question: question.to_string(),
        gold_answer: gold.to_string(),
        answer_class: None,
    }
}

fn demo(kind: DemoKind, ex: TrainingExample, context: &str, rationale: &str, answer: &str) -> Demonstration {
    Demonstration {
        kind,
        example: ex,
        context: context.to_string(),
        rationale: rationale.to_string(),
        answer: answer.to_string(),
    }
}

pub(super) fn predict() -> Vec<Demonstration> {
    vec![
        demo(
            DemoKind::Predict,
            example("manhattan", MANHATTAN_Q, "Steve Masiello"),
            MANHATTAN_PREDICT_CONTEXT,
            "Steve Masiello was born on September 2, 1977 [2][3]. John Gallagher is the current head coach of the Manhattan Jaspers basketball team [1][4][5].",
            "Steve Masiello",
        ),
        demo(
            DemoKind::Predict,
            example("cutchin", CUTCHIN_Q, "Oklahoma Agricultural and Mechanical College"),
            CUTCHIN_PREDICT_CONTEXT,
            "Oklahoma Agricultural and Mechanical College [1][2].",
            "Oklahoma Agricultural and Mechanical College",
        ),
        demo(
            DemoKind::Predict,
            example("wisconsin", WISCONSIN_Q, "Scott Walker"),
            WISCONSIN_PREDICT_CONTEXT,
            "Former Republican Governor Scott Walker oversaw a vote to significantly limit public employee collective bargaining [1][4][5][6][7].",
            "Scott Walker",
        ),
    ]
}

pub(super) fn plan() -> Vec<Demonstration> {
    vec![
        demo(
            DemoKind::Plan,
            example("manhattan", MANHATTAN_Q, "Steve Masiello"),
            MANHATTAN_PLAN_CONTEXT,
            MANHATTAN_PLAN,
            "Step 2 depends on Step 1.",
        ),
        demo(
            DemoKind::Plan,
            example("cutchin", CUTCHIN_Q, "Oklahoma Agricultural and Mechanical College"),
            CUTCHIN_PLAN_CONTEXT,
            CUTCHIN_PLAN,
            "Step 2 depends on Step 1.",
        ),
    ]
}

pub(super) fn self_reflect() -> Vec<Demonstration> {
    vec![
        demo(
            DemoKind::SelfReflect,
            example("manhattan", MANHATTAN_Q, "Steve Masiello"),
            "",
            MANHATTAN_PLAN,
            "Step 2 depends on Step 1.",
        ),
        demo(
            DemoKind::SelfReflect,
            example("cutchin", CUTCHIN_Q, "Oklahoma Agricultural and Mechanical College"),
            "",
            CUTCHIN_PLAN,
            "Step 2 depends on Step 1.",
        ),
    ]
}

pub(super) fn rewrite() -> Vec<Demonstration> {
    vec![
        demo(
            DemoKind::Rewrite,
            example("manhattan", MANHATTAN_Q, "Steve Masiello"),
            "Step 1: Who is the head coach of the Manhattan Jaspers basketball team? ANSWER: John Gallagher. Step 2: When was the head coach born?",
            "",
            "When was the head coach of the Manhattan Jaspers basketball team born?",
        ),
        demo(
            DemoKind::Rewrite,
            example("cutchin", CUTCHIN_Q, "Oklahoma Agricultural and Mechanical College"),
            "Step 1: What was Oklahoma State University-Stillwater originally known as? ANSWER: Oklahoma Agricultural and Mechanical College. Step 2: When did Phil Cutchin serve as the head football coach at Oklahoma State University-Stillwater?",
            "",
            "When did Phil Cutchin serve as the head football coach at Oklahoma State University-Stillwater?",
        ),
    ]
}
