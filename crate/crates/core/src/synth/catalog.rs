/// A library the generator can import, with the names its code uses.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LibDef {
    pub name: &'static str,
    pub alias: Option<&'static str>,
    pub sub: Option<&'static str>,
    pub funcs: [&'static str; 2],
    pub symbols: [&'static str; 2],
}

const fn lib(
    name: &'static str,
    alias: Option<&'static str>,
    sub: Option<&'static str>,
    funcs: [&'static str; 2],
    symbols: [&'static str; 2],
) -> LibDef {
    LibDef {
        name,
        alias,
        sub,
        funcs,
        symbols,
    }
}

/// Ordered by how often the generator picks them.
pub(crate) const CATALOG: &[LibDef] = &[
    lib("numpy", Some("np"), Some("linalg"), ["mean", "stack"], ["zeros", "asarray"]),
    lib("os", None, Some("path"), ["getenv", "makedirs"], ["getcwd", "listdir"]),
    lib("pandas", Some("pd"), Some("io"), ["concat", "merge"], ["DataFrame", "read_csv"]),
    lib("sys", None, None, ["exit", "getsizeof"], ["getrecursionlimit", "intern"]),
    lib("re", None, None, ["sub", "search"], ["compile", "findall"]),
    lib("json", None, Some("decoder"), ["dumps", "loads"], ["JSONEncoder", "JSONDecodeError"]),
    lib("requests", Some("rq"), Some("adapters"), ["get", "post"], ["Session", "Request"]),
    lib("math", None, None, ["sqrt", "floor"], ["isclose", "hypot"]),
    lib("matplotlib", Some("mpl"), Some("pyplot"), ["use", "rc"], ["rcParams", "colormaps"]),
    lib("collections", None, Some("abc"), ["namedtuple", "deque"], ["Counter", "OrderedDict"]),
    lib("scipy", Some("sp"), Some("stats"), ["fft", "ifft"], ["integrate", "optimize"]),
    lib("random", Some("rnd"), None, ["seed", "randint"], ["shuffle", "choice"]),
    lib("django", None, Some("db"), ["setup", "get_version"], ["VERSION", "apps"]),
    lib("itertools", Some("it"), None, ["chain", "product"], ["islice", "groupby"]),
    lib("flask", None, Some("json"), ["render_template", "redirect"], ["Flask", "jsonify"]),
    lib("subprocess", None, None, ["run", "call"], ["Popen", "check_output"]),
    lib("logging", Some("lg"), Some("handlers"), ["info", "warning"], ["getLogger", "basicConfig"]),
    lib("torch", Some("th"), Some("nn"), ["tensor", "randn"], ["no_grad", "manual_seed"]),
    lib("yaml", None, None, ["dump", "safe_dump"], ["safe_load", "load_all"]),
    lib("sklearn", Some("skl"), Some("linear_model"), ["clone", "show_versions"], ["config_context", "get_config"]),
    lib("cupy", Some("np"), Some("linalg"), ["asnumpy", "cumsum"], ["ElementwiseKernel", "RawKernel"]),
    lib("click", None, None, ["echo", "style"], ["command", "option"]),
    lib("boto3", None, Some("session"), ["client", "resource"], ["setup_default_session", "set_stream_logger"]),
    lib("tqdm", None, Some("auto"), ["write", "set_lock"], ["trange", "tqdm_notebook"]),
    lib("six", None, Some("moves"), ["iteritems", "print_"], ["with_metaclass", "add_metaclass"]),
    lib("attr", None, None, ["evolve", "fields"], ["attrs", "attrib"]),
    lib("modin", Some("pd"), Some("pandas"), ["read_parquet", "to_pickle"], ["ModinFrame", "ModinSeries"]),
    lib("datautils", Some("du"), Some("io"), ["load_table", "save_table"], ["TableSpec", "normalize_rows"]),
    lib("appconfig", None, Some("loader"), ["load_config", "get_setting"], ["ConfigError", "Settings"]),
    lib("geomkit", Some("gk"), Some("shapes"), ["area", "centroid"], ["Polygon", "bounding_box"]),
];

/// Names used by untagged filler code. None of them is a library name or an
/// importable token.
pub(crate) const VARIABLES: &[&str] = &["x", "y", "data", "result", "value", "items", "count", "total", "buf", "out"];
pub(crate) const FILLER_FUNCS: &[&str] = &["helper", "process", "build_index", "check_input", "render"];
pub(crate) const FILE_WORDS: &[&str] = &["core", "utils", "models", "views", "cli", "io_helpers", "tasks", "plots"];

pub(crate) const FIRST_NAMES: &[&str] = &[
    "Ada", "Brian", "Chen", "Dana", "Emeka", "Farah", "Goran", "Hana", "Ivan", "Jia", "Kofi", "Lena", "Mateo",
    "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq", "Uma", "Viktor", "Wen", "Ximena", "Yusuf", "Zoe",
];
pub(crate) const LAST_NAMES: &[&str] = &[
    "Adler", "Baptiste", "Costa", "Dube", "Eriksen", "Fischer", "Garcia", "Haddad", "Ito", "Jensen", "Kowalski",
    "Lopez", "Mensah", "Novak", "Okafor", "Petrov", "Rahman", "Silva", "Tanaka", "Ueda", "Varga", "Weber",
];
pub(crate) const DOMAINS: &[&str] = &["example.com", "mail.example.org", "dev.example.net", "users.example.io"];
