"""
Static analysis of Python source files.

A file is parsed into an abstract syntax tree; imports are collected into an import table,
call expressions whose head is bound by an import are resolved to fully qualified callee names,
and calls matching a catalogued signature are reported as usage records together with the model
name passed to them.

Approximations:

- Imports anywhere in the file are hoisted into one module-level table, in source order; later
  bindings shadow earlier ones.
- Star imports are recorded but never resolved.
- Model names are resolved from string literals and, by one hop, from module-level names
  assigned exactly once to a string literal.
- Calls in unreachable code (e.g. under `if False:`) are reported like any other call.
"""
import ast
import typing
import collections

import attr

from .models import ResolvedName, DYNAMIC, UsageRecord
from .signatures import Signature, SignatureSet

__all__ = [
    'MAX_FILE_SIZE', 'FileSkipped', 'StringLiteral', 'NameRef', 'Other',
    'ImportBinding', 'ImportTable', 'CallSite',
    'parse_source', 'build_import_table', 'resolve_calls', 'module_constants',
    'loads_weights', 'extract_model_name', 'scan_file']

MAX_FILE_SIZE = 2 * 1024 * 1024

_SCOPES = (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda, ast.ClassDef,
           ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)


class FileSkipped(Exception):
    """A file that could not be analyzed."""

    def __init__(self, path, reason, lineno=None, offset=None):
        self.path = str(path)
        self.reason = reason
        self.lineno = lineno
        self.offset = offset
        super().__init__(str(self))

    def __str__(self):
        if self.lineno:
            return '{0}: {1} (line {2}, column {3})'.format(
                self.path, self.reason, self.lineno, self.offset)
        return '{0}: {1}'.format(self.path, self.reason)


@attr.s(frozen=True)
class StringLiteral(object):
    text = attr.ib()


@attr.s(frozen=True)
class NameRef(object):
    name = attr.ib()


@attr.s(frozen=True)
class Other(object):
    #: `None` or `False` constant, i.e. an explicit "nothing".
    falsy = attr.ib(default=False)


def describe(node: ast.AST):
    """The value descriptor for an argument expression."""
    if isinstance(node, ast.Constant):
        if isinstance(node.value, str):
            return StringLiteral(node.value)
        return Other(falsy=node.value is None or node.value is False)
    if isinstance(node, ast.Name):
        return NameRef(node.id)
    return Other()


@attr.s(frozen=True)
class ImportBinding(object):
    origin = attr.ib()
    form = attr.ib()
    line = attr.ib(default=0)


@attr.s
class ImportTable(object):
    bindings = attr.ib(default=attr.Factory(collections.OrderedDict))
    star_imports = attr.ib(default=attr.Factory(list))

    def __contains__(self, name):
        return name in self.bindings

    def __getitem__(self, name) -> ImportBinding:
        return self.bindings[name]

    def origins(self) -> typing.Dict[str, str]:
        """Map of local names to fully qualified origins."""
        return {k: v.origin for k, v in self.bindings.items()}


@attr.s
class CallSite(object):
    file = attr.ib()
    line = attr.ib()
    callee_fq = attr.ib()
    args = attr.ib(default=attr.Factory(list))
    kwargs = attr.ib(default=attr.Factory(dict))
    #: How the head of the callee was imported: `import` or `from`.
    import_form = attr.ib(default='import')
    #: Names bound in scopes enclosing the call which hide module-level names.
    shadowed = attr.ib(default=frozenset(), converter=frozenset)
    col = attr.ib(default=0)

    def slot(self, position=None, keyword=None):
        if keyword and keyword in self.kwargs:
            return self.kwargs[keyword]
        if position is not None and position < len(self.args):
            return self.args[position]


def parse_source(text: str, path='<unknown>') -> ast.Module:
    """
    :raises FileSkipped: if the text is not valid Python.
    """
    try:
        return ast.parse(text, filename=str(path))
    except SyntaxError as e:
        raise FileSkipped(path, 'syntax error: {0}'.format(e.msg), e.lineno, e.offset)
    except (ValueError, RecursionError, MemoryError) as e:
        raise FileSkipped(path, 'unparseable: {0}'.format(e.__class__.__name__))


def build_import_table(tree: ast.AST) -> ImportTable:
    res = ImportTable()
    nodes = sorted(
        (n for n in ast.walk(tree) if isinstance(n, (ast.Import, ast.ImportFrom))),
        key=lambda n: (n.lineno, n.col_offset))
    for node in nodes:
        if isinstance(node, ast.Import):
            for alias in node.names:
                if alias.asname:
                    local, origin = alias.asname, alias.name
                else:
                    # `import a.b` binds `a`
                    local = origin = alias.name.split('.')[0]
                res.bindings.pop(local, None)
                res.bindings[local] = ImportBinding(origin, 'import', node.lineno)
        else:
            if node.level or not node.module:
                # Relative imports cannot reach an installed library.
                continue
            for alias in node.names:
                if alias.name == '*':
                    res.star_imports.append(node.module)
                    continue
                local = alias.asname or alias.name
                res.bindings.pop(local, None)
                res.bindings[local] = ImportBinding(
                    '{0}.{1}'.format(node.module, alias.name), 'from', node.lineno)
    return res


def _parameters(args: ast.arguments) -> typing.Set[str]:
    res = set(a.arg for a in getattr(args, 'posonlyargs', []) + args.args + args.kwonlyargs)
    for a in [args.vararg, args.kwarg]:
        if a is not None:
            res.add(a.arg)
    return res


def _bound_names(nodes) -> typing.Set[str]:
    """
    Names bound by non-import statements in a scope, without descending into nested scopes.
    """
    names, declared = set(), set()
    stack = list(nodes)
    while stack:
        node = stack.pop()
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            names.add(node.name)
            continue
        if isinstance(node, _SCOPES):
            continue
        if isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            names.add(node.id)
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            declared.update(node.names)
        elif isinstance(node, ast.ExceptHandler) and node.name:
            names.add(node.name)
        elif node.__class__.__name__ in {'MatchAs', 'MatchStar'} and getattr(node, 'name', None):
            names.add(node.name)
        elif node.__class__.__name__ == 'MatchMapping' and getattr(node, 'rest', None):
            names.add(node.rest)
        stack.extend(ast.iter_child_nodes(node))
    return names - declared


def _dotted(node: ast.AST) -> typing.Optional[typing.List[str]]:
    if isinstance(node, ast.Name):
        return [node.id]
    if isinstance(node, ast.Attribute):
        head = _dotted(node.value)
        if head:
            return head + [node.attr]
    return None


class _CallCollector(ast.NodeVisitor):
    def __init__(self, table: ImportTable, path):
        self.table = table
        self.path = path
        self.scopes = []  # (kind, names)
        self.sites = []

    def shadowed(self):
        res = set()
        for i, (kind, names) in enumerate(self.scopes):
            # Class bodies are only visible to code directly inside them.
            if kind != 'class' or i == len(self.scopes) - 1:
                res |= names
        return res

    def _visit_scope(self, kind, names, nodes):
        self.scopes.append((kind, names))
        for node in nodes:
            self.visit(node)
        self.scopes.pop()

    def visit_FunctionDef(self, node):
        for n in node.decorator_list + node.args.defaults + [
                d for d in node.args.kw_defaults if d is not None]:
            self.visit(n)
        self._visit_scope(
            'function', _parameters(node.args) | _bound_names(node.body), node.body)

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Lambda(self, node):
        for n in node.args.defaults + [d for d in node.args.kw_defaults if d is not None]:
            self.visit(n)
        self._visit_scope('function', _parameters(node.args), [node.body])

    def visit_ClassDef(self, node):
        for n in node.decorator_list + node.bases + node.keywords:
            self.visit(n)
        self._visit_scope('class', _bound_names(node.body), node.body)

    def _visit_comprehension(self, node):
        names = set()
        for gen in node.generators:
            names |= _bound_names([gen.target])
        self._visit_scope('comprehension', names, list(ast.iter_child_nodes(node)))

    visit_ListComp = visit_SetComp = visit_DictComp = visit_GeneratorExp = _visit_comprehension

    def visit_Call(self, node):
        parts = _dotted(node.func)
        if parts and parts[0] in self.table:
            shadowed = self.shadowed()
            if parts[0] not in shadowed:
                binding = self.table[parts[0]]
                self.sites.append(CallSite(
                    file=self.path,
                    line=node.lineno,
                    col=node.col_offset,
                    callee_fq='.'.join([binding.origin] + parts[1:]),
                    args=[describe(a) if not isinstance(a, ast.Starred) else Other()
                          for a in node.args],
                    kwargs={kw.arg: describe(kw.value) for kw in node.keywords if kw.arg},
                    import_form=binding.form,
                    shadowed=shadowed,
                ))
        self.generic_visit(node)


def resolve_calls(tree: ast.AST, table: ImportTable, path='') -> typing.List[CallSite]:
    """
    Call sites whose callee head is bound in `table`, in source order.
    """
    collector = _CallCollector(table, str(path))
    collector.visit(tree)
    return sorted(collector.sites, key=lambda s: (s.line, s.col))


def module_constants(tree: ast.Module) -> typing.Dict[str, str]:
    """
    Module-level names bound exactly once, to a string literal.

    >>> module_constants(ast.parse('A = "x"\\nB = "y"\\nB = "z"'))
    {'A': 'x'}
    """
    counts, values = collections.Counter(), {}
    stack = list(tree.body)
    while stack:
        node = stack.pop()
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            counts[node.name] += 1
            continue
        if isinstance(node, _SCOPES):
            continue
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                counts[alias.asname or alias.name.split('.')[0]] += 1
        elif isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            counts[node.id] += 1
        elif isinstance(node, ast.ExceptHandler) and node.name:
            counts[node.name] += 1
        if isinstance(node, (ast.Assign, ast.AnnAssign)) and \
                isinstance(node.value, ast.Constant) and isinstance(node.value.value, str):
            for target in (node.targets if isinstance(node, ast.Assign) else [node.target]):
                if isinstance(target, ast.Name):
                    values[target.id] = node.value.value
        stack.extend(ast.iter_child_nodes(node))
    # Assignments from function bodies via `global`:
    for node in ast.walk(tree):
        if isinstance(node, ast.Global):
            counts.update(node.names)
    return {k: v for k, v in sorted(values.items()) if counts[k] == 1}


def loads_weights(site: CallSite, sig: Signature) -> bool:
    """
    Whether a call asks for pre-trained weights.

    Constructors with `weights_required` build an untrained network unless the model slot holds
    something other than a `None` or `False` constant.
    """
    if not sig.weights_required:
        return True
    value = site.slot(sig.model_arg.position, sig.model_arg.keyword)
    return not (value is None or (isinstance(value, Other) and value.falsy))


def extract_model_name(site: CallSite,
                       sig: Signature,
                       tree: typing.Optional[ast.Module] = None,
                       constants: typing.Optional[typing.Dict[str, str]] = None):
    """
    Determine the model loaded at a call site.

    :return: `ResolvedName` or `DYNAMIC`.
    """
    if sig.implied_model:
        return ResolvedName(sig.implied_model)
    value = site.slot(sig.model_arg.position, sig.model_arg.keyword)

    text = None
    if isinstance(value, StringLiteral):
        text = value.text
    elif isinstance(value, NameRef) and value.name not in site.shadowed:
        if constants is None:
            constants = module_constants(tree) if tree is not None else {}
        text = constants.get(value.name)
    if text and text.strip():
        return ResolvedName(text.strip())
    return DYNAMIC


def scan_file(path,
              text: str,
              sigset: SignatureSet,
              max_size: typing.Optional[int] = MAX_FILE_SIZE) -> typing.List[UsageRecord]:
    """
    Usage records for all calls in `text` matching a signature, sorted by line and signature.

    :raises FileSkipped: if the file is too big or cannot be parsed.
    """
    if max_size and len(text.encode('utf-8')) > max_size:
        raise FileSkipped(path, 'file larger than {0} bytes'.format(max_size))
    tree = parse_source(text, path)
    table = build_import_table(tree)
    constants = module_constants(tree)
    res = []
    for site in resolve_calls(tree, table, path):
        for sig in sigset.matching(site.callee_fq, site.import_form):
            if not loads_weights(site, sig):
                continue
            res.append(UsageRecord(
                file=str(path),
                line=site.line,
                signature_id=sig.id,
                model_name=extract_model_name(site, sig, tree, constants),
                library=sig.library,
                hub=sig.hub,
            ))
    return sorted(res, key=lambda r: (r.line, r.signature_id))
