//! Default planted topics: keyword lists ordered by weight, content type
//! (0 = tax, 1 = product), raw log-view effect, prevalence and search-engine
//! exposure factor.

pub(super) struct CatalogTopic {
    pub name: &'static str,
    pub keywords: &'static [&'static str],
    pub content_type: f64,
    pub view_effect: f64,
    pub prevalence: f64,
    pub search_exposure: f64,
}

pub(super) const CATALOG: &[CatalogTopic] = &[
    CatalogTopic {
        name: "refund",
        keywords: &[
            "refund", "check", "account", "bank", "receive", "deposit", "direct", "received",
            "weeks", "mail", "amount", "transfer", "routing",
        ],
        content_type: 0.45,
        view_effect: 0.65,
        prevalence: 0.060,
        search_exposure: 1.6,
    },
    CatalogTopic {
        name: "dependents",
        keywords: &[
            "claim",
            "child",
            "son",
            "dependent",
            "daughter",
            "custody",
            "parent",
            "lived",
            "support",
            "girlfriend",
            "grandchild",
            "qualifying",
        ],
        content_type: 0.10,
        view_effect: -0.05,
        prevalence: 0.045,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "efile_status",
        keywords: &[
            "file",
            "accept",
            "still",
            "day",
            "say",
            "accepted",
            "efile",
            "pending",
            "submitted",
            "rejected",
            "status",
            "hours",
        ],
        content_type: 0.55,
        view_effect: 0.95,
        prevalence: 0.050,
        search_exposure: 2.4,
    },
    CatalogTopic {
        name: "assisted_support",
        keywords: &[
            "help",
            "number",
            "please",
            "card",
            "call",
            "phone",
            "talk",
            "someone",
            "agent",
            "contact",
            "customer",
            "representative",
        ],
        content_type: 0.92,
        view_effect: -0.30,
        prevalence: 0.040,
        search_exposure: 0.7,
    },
    CatalogTopic {
        name: "pricing",
        keywords: &[
            "price", "charge", "fee", "free", "cost", "upgrade", "charged", "discount", "refund",
            "deluxe", "premier", "money",
        ],
        content_type: 0.95,
        view_effect: 0.10,
        prevalence: 0.040,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "installation",
        keywords: &[
            "install",
            "download",
            "computer",
            "windows",
            "mac",
            "update",
            "error",
            "software",
            "cd",
            "installed",
            "message",
            "program",
        ],
        content_type: 0.97,
        view_effect: -0.10,
        prevalence: 0.030,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "sign_in",
        keywords: &[
            "password",
            "login",
            "sign",
            "user",
            "email",
            "reset",
            "locked",
            "username",
            "access",
            "code",
            "verification",
            "log",
        ],
        content_type: 0.90,
        view_effect: 0.05,
        prevalence: 0.030,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "wage_forms",
        keywords: &[
            "w2",
            "employer",
            "box",
            "wages",
            "corrected",
            "missing",
            "withholding",
            "employers",
            "w-2",
            "paycheck",
            "job",
            "enter",
        ],
        content_type: 0.20,
        view_effect: 0.15,
        prevalence: 0.040,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "contractor_income",
        keywords: &[
            "1099",
            "misc",
            "contractor",
            "self",
            "employment",
            "schedule",
            "business",
            "expenses",
            "independent",
            "income",
            "1099-misc",
            "net",
        ],
        content_type: 0.20,
        view_effect: -0.15,
        prevalence: 0.035,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "home",
        keywords: &[
            "mortgage",
            "interest",
            "home",
            "property",
            "1098",
            "deduct",
            "points",
            "sold",
            "house",
            "purchase",
            "refinance",
            "escrow",
        ],
        content_type: 0.10,
        view_effect: -0.20,
        prevalence: 0.030,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "education",
        keywords: &[
            "tuition",
            "1098-t",
            "student",
            "education",
            "scholarship",
            "college",
            "loan",
            "credit",
            "school",
            "american",
            "opportunity",
            "books",
        ],
        content_type: 0.12,
        view_effect: 0.10,
        prevalence: 0.030,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "health_coverage",
        keywords: &[
            "health",
            "insurance",
            "1095-a",
            "marketplace",
            "premium",
            "coverage",
            "penalty",
            "exemption",
            "medical",
            "obamacare",
            "aca",
            "info",
        ],
        content_type: 0.30,
        view_effect: 0.35,
        prevalence: 0.040,
        search_exposure: 1.1,
    },
    CatalogTopic {
        name: "state_return",
        keywords: &[
            "state",
            "resident",
            "nonresident",
            "moved",
            "california",
            "york",
            "part",
            "ohio",
            "county",
            "local",
            "city",
            "illinois",
        ],
        content_type: 0.25,
        view_effect: -0.10,
        prevalence: 0.035,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "amend",
        keywords: &[
            "amend", "amended", "1040x", "mistake", "forgot", "change", "correct", "already",
            "filed", "wrong", "fix", "resend",
        ],
        content_type: 0.40,
        view_effect: 0.20,
        prevalence: 0.035,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "medical_expenses",
        keywords: &[
            "expenses",
            "itemize",
            "doctor",
            "bills",
            "prescription",
            "dental",
            "deduction",
            "hsa",
            "surgery",
            "hospital",
            "glasses",
            "insurance",
        ],
        content_type: 0.08,
        view_effect: -0.35,
        prevalence: 0.025,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "retirement",
        keywords: &[
            "ira",
            "401k",
            "roth",
            "contribution",
            "distribution",
            "rollover",
            "retirement",
            "pension",
            "1099-r",
            "withdrawal",
            "early",
            "traditional",
        ],
        content_type: 0.10,
        view_effect: -0.10,
        prevalence: 0.030,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "investments",
        keywords: &[
            "stock",
            "sale",
            "capital",
            "gains",
            "loss",
            "1099-b",
            "basis",
            "brokerage",
            "shares",
            "dividends",
            "sold",
            "cost",
        ],
        content_type: 0.15,
        view_effect: -0.25,
        prevalence: 0.025,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "rental",
        keywords: &[
            "rental",
            "depreciation",
            "tenant",
            "rent",
            "repairs",
            "landlord",
            "rented",
            "units",
            "condo",
            "airbnb",
            "vacation",
            "room",
        ],
        content_type: 0.08,
        view_effect: -0.40,
        prevalence: 0.020,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "benefits",
        keywords: &[
            "unemployment",
            "social",
            "security",
            "benefits",
            "ssa-1099",
            "1099-g",
            "disability",
            "ssi",
            "compensation",
            "received",
            "taxable",
            "benefit",
        ],
        content_type: 0.15,
        view_effect: 0.05,
        prevalence: 0.030,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "balance_due",
        keywords: &[
            "owe",
            "payment",
            "pay",
            "due",
            "balance",
            "installment",
            "plan",
            "debit",
            "withdraw",
            "bank",
            "penalty",
            "date",
        ],
        content_type: 0.50,
        view_effect: 0.30,
        prevalence: 0.035,
        search_exposure: 1.1,
    },
    CatalogTopic {
        name: "extension",
        keywords: &[
            "extension",
            "4868",
            "deadline",
            "april",
            "late",
            "extend",
            "15th",
            "time",
            "after",
            "october",
            "file",
            "penalty",
        ],
        content_type: 0.35,
        view_effect: 0.00,
        prevalence: 0.025,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "filing_status",
        keywords: &[
            "married",
            "jointly",
            "separately",
            "spouse",
            "wife",
            "husband",
            "filing",
            "head",
            "household",
            "single",
            "divorced",
            "separated",
        ],
        content_type: 0.12,
        view_effect: 0.05,
        prevalence: 0.035,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "charity",
        keywords: &[
            "donation",
            "charitable",
            "church",
            "goodwill",
            "noncash",
            "donated",
            "receipt",
            "clothes",
            "charity",
            "itsdeductible",
            "value",
            "items",
        ],
        content_type: 0.10,
        view_effect: -0.30,
        prevalence: 0.020,
        search_exposure: 0.8,
    },
    CatalogTopic {
        name: "earned_income_credit",
        keywords: &[
            "eic",
            "earned",
            "eitc",
            "qualify",
            "credit",
            "additional",
            "ctc",
            "path",
            "act",
            "hold",
            "delay",
            "february",
        ],
        content_type: 0.30,
        view_effect: 0.45,
        prevalence: 0.035,
        search_exposure: 1.3,
    },
    CatalogTopic {
        name: "vehicle",
        keywords: &[
            "mileage", "car", "vehicle", "miles", "truck", "uber", "driving", "gas", "lyft",
            "lease", "actual", "standard",
        ],
        content_type: 0.12,
        view_effect: -0.20,
        prevalence: 0.025,
        search_exposure: 0.9,
    },
    CatalogTopic {
        name: "print_save",
        keywords: &[
            "print", "copy", "pdf", "save", "previous", "printed", "printer", "copies", "view",
            "open", "saved", "returns",
        ],
        content_type: 0.85,
        view_effect: 0.20,
        prevalence: 0.030,
        search_exposure: 1.0,
    },
    CatalogTopic {
        name: "prior_year_agi",
        keywords: &[
            "agi",
            "pin",
            "prior",
            "signature",
            "verify",
            "adjusted",
            "gross",
            "last",
            "year's",
            "self-select",
            "electronic",
            "rejects",
        ],
        content_type: 0.70,
        view_effect: 0.40,
        prevalence: 0.030,
        search_exposure: 1.2,
    },
    CatalogTopic {
        name: "identity",
        keywords: &[
            "identity", "theft", "fraud", "ssn", "letter", "someone", "used", "stolen", "5071c",
            "verify", "irs", "scam",
        ],
        content_type: 0.40,
        view_effect: 0.10,
        prevalence: 0.025,
        search_exposure: 1.1,
    },
    CatalogTopic {
        name: "foreign",
        keywords: &[
            "foreign",
            "abroad",
            "exclusion",
            "2555",
            "treaty",
            "country",
            "visa",
            "citizen",
            "overseas",
            "nonresident",
            "canada",
            "living",
        ],
        content_type: 0.10,
        view_effect: -0.45,
        prevalence: 0.020,
        search_exposure: 0.7,
    },
    CatalogTopic {
        name: "gambling",
        keywords: &[
            "gambling", "winnings", "w2g", "lottery", "prize", "casino", "losses", "won",
            "jackpot", "slot", "bingo", "poker",
        ],
        content_type: 0.10,
        view_effect: -0.15,
        prevalence: 0.020,
        search_exposure: 0.9,
    },
];
