"""Source instrumentation for the resource-handle sanitizer.

The transform is textual: a macro block is inserted after the driver's
includes so every tracked acquire/release call routes through the runtime
table, and the entry point is renamed and wrapped so the table is audited
when the entry returns. Driver sources are generated code with simple
lvalue arguments, which keeps the comma-operator release macros safe.

The companion C runtime (table, report, abort) is supplied by the library
under test via ``FsanConfig.runtime_source``; this module only rewrites
driver text.
"""

from __future__ import annotations

import re

from .config import FsanConfig

KIND_FD = 0
KIND_STREAM = 1
KIND_PAIR_BASE = 2  # library pair k uses kind KIND_PAIR_BASE + k

_INCLUDE_RE = re.compile(r"^[ \t]*#[ \t]*include\b.*$", re.MULTILINE)


def _insert_after_includes(source: str, block: str) -> str:
    last = None
    for m in _INCLUDE_RE.finditer(source):
        last = m
    if last is None:
        return block + "\n" + source
    pos = last.end()
    return source[:pos] + "\n" + block + source[pos:]


def _rename_symbol(source: str, symbol: str, replacement: str) -> str:
    return re.sub(rf"\b{re.escape(symbol)}\b", replacement, source)


def instrument(source: str, cfg: FsanConfig, entry_symbol: str = "LLVMFuzzerTestOneInput") -> str:
    """Wrap tracked calls and audit the entry function's resource balance."""
    lines = ["/* resource-audit instrumentation */", '#include "fsan_rt.h"']
    for fn in cfg.fd_acquire:
        lines.append(f"#define {fn}(...) fsan_acq_fd({fn}(__VA_ARGS__))")
    for fn in cfg.stream_acquire:
        if any(t[0] == fn for t in cfg.transfers):
            continue  # transfer forms get a dedicated macro below
        lines.append(f"#define {fn}(...) fsan_acq_stream({fn}(__VA_ARGS__))")
    for fn in cfg.fd_release:
        lines.append(f"#define {fn}(x) fsan_close_fd(x)")
    for fn in cfg.stream_release:
        lines.append(f"#define {fn}(x) fsan_close_stream(x)")
    for entry in cfg.transfers:
        fn, arg_index, arity = entry[0], entry[1], entry[2] if len(entry) > 2 else entry[1] + 1
        params = [f"a{i}" for i in range(arity)]
        call_args = [
            f"fsan_transfer_fd(a{i})" if i == arg_index else f"a{i}" for i in range(arity)
        ]
        wrapped = f"{fn}({', '.join(call_args)})"
        if fn in cfg.stream_acquire:
            wrapped = f"fsan_acq_stream({wrapped})"
        lines.append(f"#define {fn}({', '.join(params)}) {wrapped}")
    for k, pair in enumerate(cfg.pairs):
        acq, rel = pair[0], pair[1]
        kind = KIND_PAIR_BASE + k
        lines.append(f"#define {acq}(...) fsan_acq_handle({kind}, {acq}(__VA_ARGS__))")
        lines.append(
            f"#define {rel}(x) (fsan_rel_handle({kind}, (const void *)(x)), {rel}(x))"
        )
    block = "\n".join(lines) + "\n"

    inner = f"__fsan_inner_{entry_symbol}"
    out = _rename_symbol(source, entry_symbol, inner)
    out = _insert_after_includes(out, block)
    out += (
        "\n"
        f"int {entry_symbol}(const unsigned char *fsan_data, size_t fsan_size) {{\n"
        "  fsan_enter();\n"
        f"  int fsan_rc = {inner}(fsan_data, fsan_size);\n"
        "  fsan_audit_exit();\n"
        "  return fsan_rc;\n"
        "}\n"
    )
    return out


def add_input_file_shim(
    source: str, entry_symbol: str = "LLVMFuzzerTestOneInput", literal: str = "input_file"
) -> str:
    """Give a file-consuming driver its input file under in-process fuzzing:
    the entry is renamed and a wrapper writes the data to the expected path
    before delegating."""
    inner = f"__ds_inner_{entry_symbol}"
    out = _rename_symbol(source, entry_symbol, inner)
    out += (
        "\n"
        "#include <stdio.h>\n"
        f"int {entry_symbol}(const unsigned char *ds_data, size_t ds_size) {{\n"
        f'  FILE *ds_f = fopen("{literal}", "wb");\n'
        "  if (ds_f) {\n"
        "    fwrite(ds_data, 1, ds_size, ds_f);\n"
        "    fclose(ds_f);\n"
        "  }\n"
        f"  return {inner}(ds_data, ds_size);\n"
        "}\n"
    )
    return out


def consumes_input_file(source: str, literal: str = "input_file") -> bool:
    return f'"{literal}"' in source
