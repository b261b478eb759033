"""Static snapshot of common public suffixes.

Used to split a hostname into (public suffix, registrable domain, other host
labels) without any network lookup.  The snapshot covers the generic TLDs and
the country suffixes that appear in the bundled corpora; unknown hosts fall
back to treating the last label as the suffix.
"""

PUBLIC_SUFFIXES = frozenset({
    # generic
    "com", "net", "org", "edu", "gov", "mil", "int", "info", "biz", "name",
    "pro", "aero", "coop", "museum", "mobi", "asia", "cat", "jobs", "tel",
    "travel", "post", "xxx", "arpa",
    # newer generic
    "io", "co", "ai", "app", "dev", "cloud", "online", "site", "store",
    "tech", "me", "tv", "cc", "ws", "xyz", "top", "club", "live", "news",
    "shop", "blog", "page", "link", "email", "plus", "today", "world",
    # reserved / testing
    "test", "example", "invalid", "localhost", "local",
    # country suffixes, including common second-level registries
    "uk", "co.uk", "org.uk", "ac.uk", "gov.uk", "net.uk", "me.uk",
    "de", "fr", "it", "es", "nl", "be", "ch", "at", "se", "no", "fi", "dk",
    "pl", "cz", "ru", "com.ru", "ua", "com.ua", "jp", "co.jp", "ne.jp",
    "or.jp", "ac.jp", "go.jp", "cn", "com.cn", "net.cn", "org.cn", "gov.cn",
    "edu.cn", "hk", "com.hk", "org.hk", "in", "co.in", "net.in", "org.in",
    "gov.in", "ac.in", "au", "com.au", "net.au", "org.au", "edu.au",
    "gov.au", "id.au", "nz", "co.nz", "net.nz", "org.nz", "ac.nz",
    "br", "com.br", "net.br", "org.br", "gov.br", "mx", "com.mx", "org.mx",
    "kr", "co.kr", "or.kr", "sg", "com.sg", "edu.sg", "za", "co.za",
    "org.za", "tr", "com.tr", "gen.tr", "ca", "qc.ca", "on.ca", "bc.ca",
    "tw", "com.tw", "org.tw", "my", "com.my", "th", "co.th", "in.th",
    "ph", "com.ph", "vn", "com.vn", "ar", "com.ar", "cl", "il", "co.il",
    "org.il", "ie", "pt", "gr", "hu", "ro", "bg", "hr", "rs", "sk", "si",
    "lt", "lv", "ee", "is", "lu", "li", "mt", "cy", "pk", "com.pk", "bd",
    "com.bd", "lk", "np", "com.np", "ir", "sa", "com.sa", "ae", "eg",
    "com.eg", "ng", "com.ng", "ke", "co.ke", "gh", "com.gh", "tz", "co.tz",
    "ug", "co.ug", "zm", "zw", "co.zw",
})


def split_host(host: str) -> tuple[str, str, list[str]]:
    """Split ``host`` into ``(suffix, registrable_domain, other_labels)``.

    The longest matching entry of :data:`PUBLIC_SUFFIXES` wins; hosts with no
    matching entry use their last label as the suffix.  IP addresses and
    single-label hosts are their own registrable domain with no suffix.
    """
    host = host.strip().strip(".").lower()
    labels = host.split(".")
    if len(labels) < 2 or all(part.isdigit() for part in labels):
        return "", host, []
    for i in range(len(labels) - 1):
        candidate = ".".join(labels[i:])
        if candidate in PUBLIC_SUFFIXES:
            if i == 0:
                # the host itself is a bare suffix
                return candidate, host, []
            registrable = ".".join(labels[i - 1:])
            return candidate, registrable, labels[: i - 1]
    suffix = labels[-1]
    registrable = ".".join(labels[-2:])
    return suffix, registrable, labels[:-2]
